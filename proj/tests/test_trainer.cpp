#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "svrlab/dataset.hpp"
#include "svrlab/gradcheck.hpp"
#include "svrlab/optim.hpp"
#include "svrlab/trainer.hpp"
#include "test_util.hpp"

namespace svrlab {
namespace {

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Vec p{1.0, -2.0};
  AdamState s;
  adam_step(p, Vec{0.0, 0.0}, s, AdamHyper{}, 1);
  EXPECT_EQ(p, (Vec{1.0, -2.0}));
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  for (double g : {3.0, -0.001, 250.0}) {
    Vec p{0.5};
    AdamState s;
    AdamHyper h;
    h.lr = 0.01;
    adam_step(p, Vec{g}, s, h, 1);
    EXPECT_NEAR(p[0], 0.5 - 0.01 * (g > 0 ? 1.0 : -1.0), 1e-7);
  }
}

TEST(Adam, MatchesReferenceTraceOnQuadratic) {
  // Independent scalar Adam on f(x) = x^2.
  double x_ref = 1.0, m = 0.0, v = 0.0;
  Vec x{1.0};
  AdamState s;
  AdamHyper h;
  h.lr = 0.1;
  for (int t = 1; t <= 10; ++t) {
    const double g = 2.0 * x_ref;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    x_ref -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    adam_step(x, Vec{2.0 * x[0]}, s, h, static_cast<std::size_t>(t));
    EXPECT_NEAR(x[0], x_ref, 1e-10) << t;
  }
}

TEST(Adam, RejectsBadInput) {
  Vec p{1.0};
  AdamState s;
  EXPECT_THROW(adam_step(p, Vec{1.0, 2.0}, s, AdamHyper{}, 1), Error);
  EXPECT_THROW(adam_step(p, Vec{1.0}, s, AdamHyper{}, 0), Error);
}

SyntheticDatasetSpec small_spec(std::uint64_t seed = 3) {
  SyntheticDatasetSpec s;
  s.num_pairs = 160;
  s.seed = seed;
  return s;
}

TEST(Dataset, DeterministicAndSplit) {
  const Dataset a = generate_dataset(small_spec());
  const Dataset b = generate_dataset(small_spec());
  EXPECT_EQ(encode_dataset(a), encode_dataset(b));
  EXPECT_EQ(a.num_train, 128u);
  EXPECT_EQ(a.num_test, 32u);
  EXPECT_NE(encode_dataset(a), encode_dataset(generate_dataset(small_spec(4))));
  for (double v : a.audio.data()) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
}

TEST(Dataset, RoundTripIsExact) {
  const Dataset a = generate_dataset(small_spec());
  const Dataset b = decode_dataset(encode_dataset(a));
  EXPECT_EQ(a.audio.data(), b.audio.data());
  EXPECT_EQ(a.text.data(), b.text.data());
  EXPECT_EQ(a.cluster, b.cluster);
  EXPECT_EQ(a.num_train, b.num_train);
  EXPECT_EQ(to_json(a.spec), to_json(b.spec));
}

TEST(Dataset, DegenerateSpecCollapses) {
  SyntheticDatasetSpec s = small_spec();
  s.within_cluster_sigma = 0.0;
  s.feature_noise_sigma = 0.0;
  s.num_clusters = 1;
  const Dataset d = generate_dataset(s);
  for (std::size_t i = 1; i < d.num_pairs(); ++i) {
    EXPECT_EQ(Vec(d.audio.row(i).begin(), d.audio.row(i).end()), Vec(d.audio.row(0).begin(), d.audio.row(0).end()));
    EXPECT_EQ(Vec(d.text.row(i).begin(), d.text.row(i).end()), Vec(d.text.row(0).begin(), d.text.row(0).end()));
  }
}

TEST(Dataset, ClustersAreTighterThanTheWholeSet) {
  SyntheticDatasetSpec s;
  s.feature_dim = 16;
  const Dataset d = generate_dataset(s);
  double within = 0.0, between = 0.0;
  std::size_t nw = 0, nb = 0;
  for (std::size_t i = 0; i < 300; ++i) {
    for (std::size_t j = i + 1; j < 300; ++j) {
      const double c = cosine(d.audio.row(i), d.audio.row(j));
      if (d.cluster[i] == d.cluster[j]) {
        within += c;
        ++nw;
      } else {
        between += c;
        ++nb;
      }
    }
  }
  EXPECT_GT(within / nw, between / nb);
}

TEST(Dataset, InvalidSpecsAreRejected) {
  SyntheticDatasetSpec s = small_spec();
  s.num_pairs = 10;
  EXPECT_THROW(validate(s, 8), Error);
  s = small_spec();
  s.within_cluster_sigma = -1.0;
  EXPECT_THROW(generate_dataset(s), Error);
}

TrainConfig quick_config(SvrVariant v = SvrVariant::None) {
  TrainConfig c;
  c.svr = v;
  c.epochs = 2;
  c.encoder_hidden = 16;
  return c;
}

TEST(Trainer, EncodersEmitUnitRows) {
  const Dataset d = generate_dataset(small_spec());
  const Model m = make_model(quick_config(), d.feature_dim(), d.spec.embed_dim);
  const EmbeddingBatch e = embed(m.text_encoder, d.text);
  EXPECT_NO_THROW(e.check_unit_rows());
}

TEST(Trainer, ZeroEpochsEqualsUntrainedEvaluation) {
  const Dataset d = generate_dataset(small_spec());
  TrainConfig c = quick_config(SvrVariant::BiStatic);
  c.alpha = 0.0;
  c.beta = 0.0;
  c.epochs = 0;
  const RunArtifacts run = train(c, d);
  ASSERT_EQ(run.metrics.size(), 1u);
  EXPECT_TRUE(run.trace.empty());
  Model fresh = make_model(c, d.feature_dim(), d.spec.embed_dim);
  MetricsRecord expected = evaluate(fresh, d, Split::Train, c, 0);
  const MetricsRecord test = retrieval_metrics(fresh, d, Split::Test);
  expected.r1_t2a = test.r1_t2a;
  expected.r5_t2a = test.r5_t2a;
  expected.r10_t2a = test.r10_t2a;
  expected.r1_a2t = test.r1_a2t;
  expected.r5_a2t = test.r5_a2t;
  expected.r10_a2t = test.r10_a2t;
  expected.map10_t2a = test.map10_t2a;
  expected.map10_a2t = test.map10_a2t;
  EXPECT_EQ(run.metrics[0], expected);
  EXPECT_EQ(encode_checkpoint(run.final_model, c, d.feature_dim(), d.spec.embed_dim),
            encode_checkpoint(fresh, c, d.feature_dim(), d.spec.embed_dim));
}

TEST(Trainer, SameSeedSameBitsAcrossThreadCounts) {
  const Dataset d = generate_dataset(small_spec());
  for (SvrVariant v : {SvrVariant::None, SvrVariant::BiDynamic}) {
    TrainConfig c = quick_config(v);
    const RunArtifacts a = train(c, d);
    c.threads = 3;
    const RunArtifacts b = train(c, d);
    EXPECT_EQ(a.metrics, b.metrics);
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_EQ(encode_checkpoint(a.final_model, c, d.feature_dim(), d.spec.embed_dim),
              encode_checkpoint(b.final_model, c, d.feature_dim(), d.spec.embed_dim));
  }
}

TEST(Trainer, InfonceTrainLossDecreases) {
  const Dataset d = generate_dataset(SyntheticDatasetSpec{});
  TrainConfig c;
  const RunArtifacts run = train(c, d);
  ASSERT_EQ(run.metrics.size(), 11u);
  EXPECT_LT(run.metrics[10].loss.total, run.metrics[1].loss.total);
  for (const auto& m : run.metrics) {
    EXPECT_LE(m.r1_t2a, m.r5_t2a);
    EXPECT_LE(m.r5_t2a, m.r10_t2a);
  }
}

TEST(Trainer, TraceCoversEveryStepAndDropsPartialBatches) {
  SyntheticDatasetSpec s = small_spec();
  s.num_pairs = 170;  // 136 train rows -> 17 batches of 8
  const Dataset d = generate_dataset(s);
  const RunArtifacts run = train(quick_config(SvrVariant::UniStatic), d);
  ASSERT_EQ(run.trace.size(), 2u * (d.num_train / 8));
  EXPECT_EQ(run.trace.back().step, run.trace.size());
  EXPECT_EQ(run.metrics.size(), 3u);
  EXPECT_GT(run.metrics[2].mean_radius_t2a, 0.0);
  EXPECT_EQ(run.metrics[2].mean_radius_a2t, 0.0);
}

TEST(Trainer, BestCheckpointHasHighestTestRecall) {
  const Dataset d = generate_dataset(small_spec());
  TrainConfig c = quick_config();
  c.epochs = 4;
  const RunArtifacts run = train(c, d);
  for (const auto& m : run.metrics) EXPECT_LE(m.r1_t2a, run.metrics[run.best_epoch].r1_t2a);
  const MetricsRecord again = retrieval_metrics(run.best_model, d, Split::Test);
  EXPECT_EQ(again.r1_t2a, run.metrics[run.best_epoch].r1_t2a);
}

TEST(Trainer, CheckpointRoundTrip) {
  const Dataset d = generate_dataset(small_spec());
  for (TrainConfig c : {quick_config(SvrVariant::BiDynamic), quick_config(SvrVariant::BiStatic)}) {
    c.base_loss = c.svr == SvrVariant::BiStatic ? BaseLoss::SigLIP : BaseLoss::InfoNCE;
    const RunArtifacts run = train(c, d);
    const auto bytes = encode_checkpoint(run.final_model, c, d.feature_dim(), d.spec.embed_dim, {{"epoch", 2}});
    LoadedCheckpoint ck = decode_checkpoint(bytes);
    EXPECT_EQ(ck.header.at("epoch"), 2);
    EXPECT_EQ(to_json(ck.cfg), to_json(c));
    EXPECT_EQ(encode_checkpoint(ck.model, ck.cfg, d.feature_dim(), d.spec.embed_dim, {{"epoch", 2}}), bytes);
    Model original = run.final_model;
    EXPECT_EQ(evaluate(ck.model, d, Split::Test, c), evaluate(original, d, Split::Test, c));
  }
  auto bytes = encode_checkpoint(make_model(quick_config(), 16, 32), quick_config(), 16, 32);
  bytes.pop_back();
  EXPECT_THROW(decode_checkpoint(bytes), Error);
}

TEST(Trainer, FullBackpropRoutesPredictorGradientIntoEncoders) {
  std::mt19937_64 rng(41);
  TrainConfig c = quick_config(SvrVariant::BiDynamic);
  c.batch_size = 4;
  const EmbeddingBatch tf(4, 16, testing::random_vec(64, rng), false);
  const EmbeddingBatch af(4, 16, testing::random_vec(64, rng), false);
  Model a = make_model(c, 16, 32);
  a.zero_grad();
  batch_objective(a, tf, af, c);
  c.radius_full_backprop = true;
  Model b = make_model(c, 16, 32);
  b.zero_grad();
  batch_objective(b, tf, af, c);
  EXPECT_NE(a.text_encoder.weight(0).grad, b.text_encoder.weight(0).grad);
  EXPECT_EQ(a.radius_t2a->params()[0]->grad, b.radius_t2a->params()[0]->grad);
}

TEST(Trainer, EndToEndGradientsForEveryVariant) {
  for (const CheckResult& r : gradcheck_trainer(7, 2)) {
    EXPECT_TRUE(r.passed) << r.name << " " << r.max_rel_error;
  }
}

TEST(Trainer, PostAdamDriftDiffersFromPreAdam) {
  const Dataset d = generate_dataset(small_spec());
  TrainConfig c = quick_config(SvrVariant::BiStatic);
  const RunArtifacts pre = train(c, d);
  c.drift_mode = DriftMode::PostAdam;
  const RunArtifacts post = train(c, d);
  EXPECT_EQ(pre.trace[3].loss.total, post.trace[3].loss.total);
  EXPECT_NE(pre.trace[3].drift_cos_t2a, post.trace[3].drift_cos_t2a);
  for (const auto& t : post.trace) {
    EXPECT_GE(t.drift_cos_t2a, -1.0);
    EXPECT_LE(t.drift_cos_t2a, 1.0);
  }
}

}  // namespace
}  // namespace svrlab
