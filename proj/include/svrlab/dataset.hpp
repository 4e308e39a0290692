#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "svrlab/config.hpp"
#include "svrlab/core_math.hpp"

namespace svrlab {

enum class Split { Train, Test };

// Paired audio/text features. Rows [0, num_train) form the train split and
// the remaining rows the test split. Values are f32-representable so an
// in-memory dataset and its file round trip agree exactly.
struct Dataset {
  SyntheticDatasetSpec spec;
  std::size_t num_train = 0;
  std::size_t num_test = 0;
  EmbeddingBatch audio;  // num_pairs x feature_dim
  EmbeddingBatch text;   // num_pairs x feature_dim
  std::vector<std::size_t> cluster;

  std::size_t num_pairs() const noexcept { return audio.rows(); }
  std::size_t feature_dim() const noexcept { return audio.dim(); }
  std::size_t split_begin(Split s) const noexcept { return s == Split::Train ? 0 : num_train; }
  std::size_t split_size(Split s) const noexcept { return s == Split::Train ? num_train : num_test; }

  // Feature rows for the given dataset row indices.
  EmbeddingBatch gather_audio(const std::vector<std::size_t>& rows) const;
  EmbeddingBatch gather_text(const std::vector<std::size_t>& rows) const;
};

// Latents near unit-sphere cluster centers, mapped to each modality by a
// fixed random linear map plus noise; deterministic 80/20 split.
Dataset generate_dataset(const SyntheticDatasetSpec& spec);

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace svrlab
