// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "fmip/config.hpp"
#include "fmip/instance_gen.hpp"
#include "fmip/metrics.hpp"
#include "fmip/report.hpp"
#include "fmip/train.hpp"

using namespace fmip;

TEST(Metrics, GapMatchesReportedTable) {
  EXPECT_NEAR(metrics_gap(401.00, 400.70), 0.30, 1e-12);
  EXPECT_DOUBLE_EQ(metrics_gap(5.0, 5.0), 0.0);
}

TEST(Metrics, ImprovementMatchesReportedTable) {
  const auto imp = metrics_imp(0.30, 0.10);
  ASSERT_TRUE(imp.has_value());
  EXPECT_NEAR(*imp, 66.67, 0.005);
  EXPECT_FALSE(metrics_imp(0.0, 0.1).has_value());  // n/a
}

TEST(Metrics, CrossEntropyCases) {
  Mat uniform = Mat::Constant(4, 2, 0.5);
  VecI label = VecI::Zero(4);
  EXPECT_NEAR(metrics_cross_entropy(uniform, label), std::log(2.0), 1e-9);

  Mat point(2, 2);
  point << 1.0, 0.0, 0.0, 1.0;
  VecI lab2(2);
  lab2 << 0, 1;
  EXPECT_NEAR(metrics_cross_entropy(point, lab2), 0.0, 1e-9);

  Mat mixed(4, 2);
  mixed << 0.2, 0.8, 0.2, 0.8, 0.5, 0.5, 0.5, 0.5;
  VecI lab4(4);
  lab4 << 1, 1, 0, 1;
  EXPECT_NEAR(metrics_cross_entropy(mixed, lab4), (2 * 0.22314355 + 2 * 0.69314718) / 4, 1e-6);
}

TEST(Config, ParsesSectionsAndDefaults) {
  const std::string text =
      "# comment\n"
      "[model]\n"
      "layers = 3\n"
      "hidden = 16\n"
      "[train]\n"
      "epochs = 10\n"
      "learning_rate = 1e-3\n"
      "[guidance]\n"
      "tau = 0.1\n"
      "[nd]\n"
      "num_candidates = 7\n"
      "[ps]\n"
      "k0 = 0.2\n"
      "[pmvb]\n"
      "threshold = 0.8\n"
      "[apollo]\n"
      "iterations = 3\n"
      "[backend]\n"
      "kind = bnb\n";
  const HarnessConfig cfg = harness_config_from_map(parse_config_text(text));
  EXPECT_EQ(cfg.model.layers, 3);
  EXPECT_EQ(cfg.model.hidden, 16);
  EXPECT_EQ(cfg.train.epochs, 10);
  EXPECT_DOUBLE_EQ(cfg.train.learning_rate, 1e-3);
  EXPECT_DOUBLE_EQ(cfg.guidance.tau, 0.1);
  EXPECT_EQ(cfg.strategies.nd.num_candidates, 7);
  EXPECT_DOUBLE_EQ(cfg.strategies.ps.k0, 0.2);
  EXPECT_DOUBLE_EQ(cfg.strategies.pmvb.threshold, 0.8);
  EXPECT_EQ(cfg.strategies.apollo.iterations, 3);
  // untouched values keep Table-4 CA defaults
  EXPECT_DOUBLE_EQ(cfg.strategies.nd.fix_fraction, 0.1);
  EXPECT_DOUBLE_EQ(cfg.strategies.ps.k1, 0.06);
  EXPECT_DOUBLE_EQ(cfg.strategies.pmvb.conf, 0.7);
  EXPECT_EQ(cfg.train.lr_schedule, "cosine-decay");
  EXPECT_DOUBLE_EQ(cfg.train.weight_decay, 1e-4);
}

TEST(Config, RejectsMalformedLines) {
  EXPECT_THROW(parse_config_text("[model\nlayers = 2\n"), std::runtime_error);
  EXPECT_THROW(parse_config_text("layers 2\n"), std::runtime_error);
}

namespace {

std::vector<LabeledInstance> tiny_dataset(int count, int nodes = 6) {
  std::vector<MilpInstance> instances;
  for (int i = 0; i < count; ++i) {
    GenSpec spec;
    spec.family = Family::kIndepSet;
    spec.nodes = nodes;
    spec.edge_prob = 0.4;
    spec.seed = 100 + i;
    instances.push_back(generate(spec));
  }
  const BnbBackend backend;
  return label_dataset(instances, backend, 30.0);
}

}  // namespace

TEST(Train, LossDecreasesOnTinyRun) {
  const auto dataset = tiny_dataset(2);
  ASSERT_EQ(dataset.size(), 2u);
  ModelConfig mcfg;
  mcfg.layers = 2;
  mcfg.hidden = 8;
  mcfg.int_categories = 2;
  TrainConfig tcfg;
  tcfg.epochs = 40;
  tcfg.learning_rate = 3e-3;
  tcfg.batch_size = 2;
  tcfg.seed = 5;
  const TrainResult res = train(dataset, mcfg, tcfg);
  ASSERT_EQ(res.epoch_loss.size(), 40u);
  // averaged tail beats averaged head (stochastic per-epoch noise smoothed)
  const double head = (res.epoch_loss[0] + res.epoch_loss[1] + res.epoch_loss[2]) / 3;
  double tail = 0.0;
  for (int i = 0; i < 5; ++i) tail += res.epoch_loss[res.epoch_loss.size() - 1 - i];
  tail /= 5;
  EXPECT_LT(tail, head);
}

TEST(Train, ReproducibleLossCurve) {
  const auto dataset = tiny_dataset(2);
  ModelConfig mcfg;
  mcfg.layers = 1;
  mcfg.hidden = 8;
  TrainConfig tcfg;
  tcfg.epochs = 5;
  tcfg.batch_size = 2;
  tcfg.seed = 9;
  const TrainResult a = train(dataset, mcfg, tcfg);
  const TrainResult b = train(dataset, mcfg, tcfg);
  ASSERT_EQ(a.epoch_loss.size(), b.epoch_loss.size());
  for (std::size_t i = 0; i < a.epoch_loss.size(); ++i)
    EXPECT_EQ(a.epoch_loss[i], b.epoch_loss[i]);  // bit-for-float identical
}

TEST(Train, ResumeContinuesEpochCounterAndState) {
  const auto dataset = tiny_dataset(2);
  ModelConfig mcfg;
  mcfg.layers = 1;
  mcfg.hidden = 8;
  TrainConfig first;
  first.epochs = 3;
  first.batch_size = 2;
  first.seed = 11;
  const TrainResult part = train(dataset, mcfg, first);
  EXPECT_EQ(part.checkpoint.extra.at("epoch").get<int>(), 3);
  const long steps_after_3 = part.checkpoint.extra.at("step").get<long>();
  EXPECT_GT(steps_after_3, 0);

  // round-trip through the serialized form, then continue to 6 epochs
  const Checkpoint restored = load_checkpoint(save_checkpoint(part.checkpoint));
  TrainConfig second = first;
  second.epochs = 6;
  const TrainResult full = train(dataset, mcfg, second, &restored);
  EXPECT_EQ(full.checkpoint.extra.at("epoch").get<int>(), 6);
  EXPECT_GT(full.checkpoint.extra.at("step").get<long>(), steps_after_3);
  EXPECT_EQ(full.epoch_loss.size(), 3u);  // only the continued epochs
}

TEST(Train, AutoBatchProbePicksPositiveSize) {
  const auto dataset = tiny_dataset(3);
  ModelConfig mcfg;
  mcfg.layers = 1;
  mcfg.hidden = 8;
  TrainConfig tcfg;
  tcfg.epochs = 1;
  tcfg.batch_size = 0;  // auto
  const TrainResult res = train(dataset, mcfg, tcfg);
  EXPECT_EQ(res.epoch_loss.size(), 1u);
  EXPECT_TRUE(std::isfinite(res.epoch_loss[0]));
}

TEST(Report, CsvRoundTripPreservesAggregates) {
  std::vector<EvalRecord> records;
  EvalRecord r;
  r.instance = "foo";
  r.method = "ps";
  r.guided = true;
  r.obj = -3.25;
  r.bks = -3.5;
  r.gap = 0.25;
  r.wall_time_s = 0.125;
  records.push_back(r);
  r.instance = "bar";
  r.method = "nd";
  r.guided = false;
  r.obj = 10.0;
  r.bks = 10.0;
  r.gap = 0.0;
  records.push_back(r);
  const std::string csv = records_to_csv(records);
  const auto back = records_from_csv(csv);
  ASSERT_EQ(back.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(back[i].instance, records[i].instance);
    EXPECT_EQ(back[i].method, records[i].method);
    EXPECT_EQ(back[i].guided, records[i].guided);
    EXPECT_EQ(back[i].obj, records[i].obj);
    EXPECT_EQ(back[i].bks, records[i].bks);
    EXPECT_EQ(back[i].gap, records[i].gap);
    EXPECT_EQ(back[i].wall_time_s, records[i].wall_time_s);
  }
}

TEST(Report, GapConsistencyInvariant) {
  // every record satisfies gap = |obj - bks| recomputed from its own fields
  const auto dataset = tiny_dataset(2);
  ModelConfig mcfg;
  mcfg.layers = 1;
  mcfg.hidden = 8;
  TrainConfig tcfg;
  tcfg.epochs = 3;
  tcfg.batch_size = 2;
  const TrainResult tr = train(dataset, mcfg, tcfg);
  const BnbBackend backend;
  StrategyConfig strat;
  strat.nd.num_candidates = 4;
  GuidanceConfig gcfg;
  EvalOptions opts;
  opts.strategies = {"ps"};
  opts.n_candidates = 8;
  opts.schedule = cosine_schedule(5);
  Rng rng(21);
  const EvalReportOut rep =
      evaluate_checkpoint(tr.checkpoint.model, dataset, strat, gcfg, backend, opts, rng);
  ASSERT_FALSE(rep.records.empty());
  for (const EvalRecord& r : rep.records) {
    EXPECT_NEAR(r.gap, metrics_gap(r.obj, r.bks), 1e-12);
    EXPECT_GE(r.obj, r.bks - 1e-9);  // bks is the minimum over methods
  }
  EXPECT_FALSE(rep.csv.empty());
  EXPECT_FALSE(rep.summary.empty());
  EXPECT_NE(rep.summary.find("cross-entropy"), std::string::npos);
}
