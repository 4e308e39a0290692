#include "svrlab/dataset.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "svrlab/container.hpp"

namespace svrlab {

namespace {

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

EmbeddingBatch gather(const EmbeddingBatch& src, const std::vector<std::size_t>& rows) {
  EmbeddingBatch out(rows.size(), src.dim(), false);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto r = src.row(rows[i]);
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

EmbeddingBatch Dataset::gather_audio(const std::vector<std::size_t>& rows) const { return gather(audio, rows); }
EmbeddingBatch Dataset::gather_text(const std::vector<std::size_t>& rows) const { return gather(text, rows); }

Dataset generate_dataset(const SyntheticDatasetSpec& spec) {
  validate(spec);
  const std::size_t n = spec.num_pairs;
  const std::size_t k = spec.latent_dim;
  const std::size_t m = spec.feature_dim;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Vec> centers(spec.num_clusters, Vec(k));
  for (auto& c : centers) {
    for (;;) {
      for (double& v : c) v = normal(rng);
      if (norm(c) > 1e-6) break;
    }
    c = l2_normalize(c);
  }
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(k));
  Vec map_audio(m * k), map_text(m * k);
  for (double& v : map_audio) v = normal(rng) * map_scale;
  for (double& v : map_text) v = normal(rng) * map_scale;

  Dataset raw;
  raw.spec = spec;
  raw.audio = EmbeddingBatch(n, m, false);
  raw.text = EmbeddingBatch(n, m, false);
  raw.cluster.resize(n);
  Vec z(k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = static_cast<std::size_t>(rng() % spec.num_clusters);
    raw.cluster[i] = c;
    for (std::size_t q = 0; q < k; ++q) z[q] = centers[c][q] + spec.within_cluster_sigma * normal(rng);
    auto xa = raw.audio.row(i);
    auto xt = raw.text.row(i);
    for (std::size_t r = 0; r < m; ++r) {
      double va = 0.0, vt = 0.0;
      for (std::size_t q = 0; q < k; ++q) {
        va += map_audio[r * k + q] * z[q];
        vt += map_text[r * k + q] * z[q];
      }
      xa[r] = to_f32(va + spec.feature_noise_sigma * normal(rng));
      xt[r] = to_f32(vt + spec.feature_noise_sigma * normal(rng));
    }
  }

  // Fisher-Yates with the raw engine so the permutation is library independent.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);

  Dataset ds;
  ds.spec = spec;
  ds.num_train = (n * 4) / 5;
  ds.num_test = n - ds.num_train;
  ds.audio = raw.gather_audio(perm);
  ds.text = raw.gather_text(perm);
  ds.cluster.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.cluster[i] = raw.cluster[perm[i]];
  return ds;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  Container c;
  const std::size_t n = ds.num_pairs();
  const std::size_t m = ds.feature_dim();
  c.header = {{"format_version", kFormatVersion},
              {"kind", "dataset"},
              {"dtype", "f32"},
              {"num_pairs", n},
              {"feature_dim", m},
              {"embed_dim", ds.spec.embed_dim},
              {"num_train", ds.num_train},
              {"num_test", ds.num_test},
              {"seed", ds.spec.seed},
              {"generator", to_json(ds.spec)},
              {"tensors",
               {{{"name", "audio"}, {"shape", {n, m}}},
                {{"name", "text"}, {"shape", {n, m}}},
                {{"name", "cluster"}, {"shape", {n}}}}}};
  append_f32(c.payload, ds.audio.data());
  append_f32(c.payload, ds.text.data());
  Vec cl(ds.cluster.begin(), ds.cluster.end());
  append_f32(c.payload, cl);
  return encode_container(c);
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  const Container c = decode_container(bytes);
  const auto& h = c.header;
  if (h.value("kind", "") != "dataset") throw Error(Errc::Format, "container is not a dataset");
  if (h.value("dtype", "") != "f32") throw Error(Errc::Format, "dataset dtype must be f32");
  Dataset ds;
  try {
    ds.spec = dataset_spec_from_json(h.at("generator"));
    const std::size_t n = h.at("num_pairs").get<std::size_t>();
    const std::size_t m = h.at("feature_dim").get<std::size_t>();
    ds.num_train = h.at("num_train").get<std::size_t>();
    ds.num_test = h.at("num_test").get<std::size_t>();
    if (ds.num_train + ds.num_test != n) throw Error(Errc::Format, "split sizes do not add up");
    std::size_t off = 0;
    ds.audio = EmbeddingBatch(n, m, read_f32(c.payload, off, n * m), false);
    ds.text = EmbeddingBatch(n, m, read_f32(c.payload, off, n * m), false);
    const Vec cl = read_f32(c.payload, off, n);
    ds.cluster.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) ds.cluster[i] = static_cast<std::size_t>(cl[i]);
    if (off != c.payload.size()) throw Error(Errc::Format, "trailing bytes after dataset payload");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("bad dataset header: ") + e.what());
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) { write_file(path, encode_dataset(ds)); }

Dataset load_dataset(const std::string& path) { return decode_dataset(read_file(path)); }

}  // namespace svrlab
