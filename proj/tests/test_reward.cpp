#include <doctest.h>

#include "crg/reward.hpp"
#include "test_support.hpp"

using namespace crg;

TEST_CASE("frozen_reward hand-computed values") {
  const auto w = derive_weights(10, 2);  // w_tp = 2
  CHECK(frozen_reward({1, 0, 0, 4}, w) == 1.0);
  CHECK(frozen_reward({0, 1, 0, 4}, w) == doctest::Approx(1.0 / 3.0));
  CHECK(frozen_reward({0, 0, 0, 5}, w) == 1.0);
  CHECK(frozen_reward({0, 0, 1, 4}, w) == doctest::Approx(0.5));
  CHECK(frozen_reward({0, 0, 3, 2}, w) == kRewardFloor);
  CHECK(frozen_reward({0, 1, 4, 0}, w) == kRewardFloor);
}

TEST_CASE("frozen_reward stays in range") {
  auto rng = testing::make_rng(41);
  const auto w = derive_weights(54702, 10535);
  for (int i = 0; i < 2000; ++i) {
    const auto [t, a] = testing::random_t_a(rng, 40);
    const auto c = testing::random_counts(rng, t, testing::uniform_int(rng, 0, a));
    const double r = frozen_reward(c, w);
    CHECK(r >= kRewardFloor);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("blended_reward") {
  CHECK(blended_reward(0.8, 0.4, 0.5) == doctest::Approx(0.6));
  CHECK(blended_reward(0.8, 0.4, 1.0) == 0.8);
  CHECK(blended_reward(0.8, 0.4, 0.0) == 0.4);
  CHECK_THROWS_AS(blended_reward(0.8, 0.4, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(blended_reward(0.8, 0.4, -0.1), std::invalid_argument);
}

TEST_CASE("frozen_config and validation") {
  LabelMatrix ref(1, {"a", "b"});
  ref.add({"s1", {{"a", true}, {"b", false}}});
  ref.add({"s2", {{"a", false}, {"b", false}}});
  const auto cfg = frozen_config(ref);
  CHECK(cfg.weights == derive_weights(4, 1));
  CHECK(cfg.labels == std::vector<std::string>{"a", "b"});

  auto bad = cfg;
  bad.weights.w_tp *= 2;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = cfg;
  bad.blend_lambda = 2.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);

  LabelMatrix all_neg(1, {"a"});
  all_neg.add({"s1", {{"a", false}}});
  CHECK_THROWS_AS(frozen_config(all_neg), DegenerateDistribution);
}

TEST_CASE("sample_reward checks the label set") {
  RewardConfig cfg{derive_weights(10, 2), 1.0, FluencyMetric::none, {"a", "b"}};
  const LabelAssignment ref{"s1", {{"a", true}, {"b", false}}};
  CHECK(sample_reward({"s1", {{"a", true}, {"b", false}}}, ref, cfg) == 1.0);
  CHECK(sample_reward({"s1", {{"a", false}, {"b", false}}}, ref, cfg) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(sample_reward({"s1", {{"a", true}}}, ref, cfg), SchemaViolation);
  const LabelAssignment other{"s1", {{"a", true}, {"c", false}}};
  CHECK_THROWS_AS(sample_reward(other, other, cfg), SchemaViolation);
}

TEST_CASE("corpus and batch rewards") {
  LabelMatrix ref(1, {"a", "b"});
  ref.add({"s1", {{"a", true}, {"b", false}}});
  ref.add({"s2", {{"a", false}, {"b", false}}});
  ref.add({"s3", {{"a", false}, {"b", true}}});
  LabelMatrix pred(1, {"a", "b"});
  pred.add({"s1", {{"a", true}, {"b", false}}});
  pred.add({"s2", {{"a", true}, {"b", false}}});
  pred.add({"s3", {{"a", false}, {"b", false}}});
  const auto pairs = align_corpora(pred, ref);
  auto cfg = frozen_config(ref);  // T = 6, A = 2, w_tp = 1
  const auto per = sample_rewards(pairs, cfg);
  REQUIRE(per.size() == 3);
  CHECK(per[0].reward == 1.0);
  CHECK(per[1].reward == kRewardFloor);  // 1 - 1/1 = 0, floored
  CHECK(per[2].reward == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(per[0].fluency.has_value());

  cfg.blend_lambda = 0.5;
  const std::vector<double> fluency{0.0, 1.0, 0.5};
  const auto blended = sample_rewards(pairs, cfg, &fluency);
  CHECK(blended[1].reward == doctest::Approx(0.6));
  const std::vector<double> short_fluency{0.0};
  CHECK_THROWS_AS(sample_rewards(pairs, cfg, &short_fluency), std::invalid_argument);

  const auto batches = batch_rewards(pairs, cfg, 2);
  REQUIRE(batches.size() == 2);
  // First batch pooled: tp = 1, fp = 1, A = 1: s = 1 - 1 = 0, 1 / 2
  CHECK(batches[0] == doctest::Approx(0.5));
  CHECK(batches[1] == doctest::Approx(1.0 / 3.0));
  const auto whole = batch_rewards(pairs, cfg, 10);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0] == doctest::Approx(crg_from_counts({1, 1, 1, 3}).score));
}

TEST_CASE("fluency metric names") {
  CHECK(parse_fluency_metric("bleu4") == FluencyMetric::bleu4);
  CHECK(std::string(to_string(FluencyMetric::rouge_l)) == "rouge_l");
  CHECK_THROWS_AS(parse_fluency_metric("cider"), std::invalid_argument);
}
