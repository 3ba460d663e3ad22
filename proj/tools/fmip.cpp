// SPDX-License-Identifier: Apache-2.0
//
// fmip: generate / label / train / sample / solve / eval / selfcheck
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fmip/config.hpp"
#include "fmip/external.hpp"
#include "fmip/instance_gen.hpp"
#include "fmip/report.hpp"
#include "fmip/selfcheck.hpp"
#include "fmip/train.hpp"

namespace fs = std::filesystem;
using namespace fmip;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
  if (cfg.kind == "external") {
    std::string tmpl = cfg.command;
    if (tmpl.empty()) {
      const char* env = std::getenv("FMIP_EXTERNAL_SOLVER");
      if (env) tmpl = env;
    }
    if (tmpl.empty())
      throw std::runtime_error("external backend needs [backend] command or FMIP_EXTERNAL_SOLVER");
    return std::make_unique<ExternalBackend>(tmpl);
  }
  return std::make_unique<BnbBackend>(cfg.gap_tol);
}

Checkpoint load_ckpt_file(const std::string& path) { return load_checkpoint(slurp(path)); }

void print_result(const SolveResult& res, const MilpInstance& inst) {
  std::cout << "status:    " << to_string(res.status) << "\n";
  if (res.assignment) {
    std::cout << "objective: " << res.objective << "\n";
    const EvalReport rep = evaluate(inst, *res.assignment);
    std::cout << "feasible:  " << (rep.feasible ? "yes" : "no")
              << " (max violation " << rep.max_violation << ")\n";
  }
  std::cout << "wall:      " << res.wall_time_s << "s\n";
  if (res.nodes > 0) std::cout << "nodes:     " << res.nodes << "\n";
  if (!res.message.empty()) std::cout << "note:      " << res.message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multimodal flow matching for MILP solution prediction"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "config file ([model] [train] [guidance] ... sections)");

  // ---- generate
  auto* gen = app.add_subcommand("generate", "generate a synthetic instance dataset");
  std::string gen_family = "indep_set", gen_out;
  int gen_count = 10;
  std::uint64_t gen_seed = 0;
  GenSpec gen_spec;
  double gen_frac_cont = 0.0;
  gen->add_option("--family", gen_family, "set_cover | indep_set | comb_auction")->required();
  gen->add_option("--count", gen_count, "number of instances");
  gen->add_option("--seed", gen_seed, "base seed (instance i uses seed+i)");
  gen->add_option("--rows", gen_spec.rows, "set_cover rows");
  gen->add_option("--cols", gen_spec.cols, "set_cover columns");
  gen->add_option("--density", gen_spec.density, "set_cover density");
  gen->add_option("--nodes", gen_spec.nodes, "indep_set nodes");
  gen->add_option("--edge-prob", gen_spec.edge_prob, "indep_set edge probability");
  gen->add_option("--items", gen_spec.items, "comb_auction items");
  gen->add_option("--bids", gen_spec.bids, "comb_auction bids");
  gen->add_option("--frac-continuous", gen_frac_cont,
                  "relax this fraction of variables to continuous");
  gen->add_option("--out", gen_out, "dataset directory")->required();

  // ---- label
  auto* lab = app.add_subcommand("label", "solve instances and store labels");
  std::string lab_dir;
  double lab_time_limit = 60.0;
  lab->add_option("--dataset", lab_dir, "dataset directory")->required();
  lab->add_option("--time-limit", lab_time_limit, "seconds per instance");

  // ---- train
  auto* trn = app.add_subcommand("train", "train the flow model on a labeled dataset");
  std::string trn_dir, trn_out, trn_resume, trn_curve;
  trn->add_option("--dataset", trn_dir, "labeled dataset directory")->required();
  trn->add_option("--out", trn_out, "checkpoint path")->required();
  trn->add_option("--resume", trn_resume, "checkpoint to continue from");
  trn->add_option("--loss-curve", trn_curve, "CSV of per-epoch loss (default <out>.loss.csv)");

  // ---- sample
  auto* smp = app.add_subcommand("sample", "sample candidate solutions for one instance");
  std::string smp_ckpt, smp_instance, smp_pool;
  int smp_candidates = 64, smp_steps = 30;
  std::uint64_t smp_seed = 0;
  bool smp_no_guidance = false;
  smp->add_option("--ckpt", smp_ckpt, "trained checkpoint")->required();
  smp->add_option("--instance", smp_instance, "instance JSON file")->required();
  smp->add_option("--pool", smp_pool, "output pool file")->required();
  smp->add_option("--candidates", smp_candidates, "number of candidates");
  smp->add_option("--steps", smp_steps, "inference steps (cosine schedule)");
  smp->add_option("--seed", smp_seed, "sampling seed");
  smp->add_flag("--no-guidance", smp_no_guidance, "disable the guidance mechanism");

  // ---- solve
  auto* slv = app.add_subcommand("solve", "run a downstream strategy from a pool or checkpoint");
  std::string slv_instance, slv_pool, slv_ckpt, slv_strategy, slv_sol;
  double slv_time_limit = 60.0;
  std::uint64_t slv_seed = 0;
  int slv_candidates = 64, slv_steps = 30;
  slv->add_option("--instance", slv_instance, "instance JSON file")->required();
  slv->add_option("--strategy", slv_strategy, "nd | ps | pmvb | apollo")->required();
  slv->add_option("--pool", slv_pool, "candidate pool file (marginal source)");
  slv->add_option("--ckpt", slv_ckpt, "checkpoint (samples marginals; required for apollo)");
  slv->add_option("--time-limit", slv_time_limit, "seconds");
  slv->add_option("--seed", slv_seed, "seed for sampling and diving streams");
  slv->add_option("--candidates", slv_candidates, "candidates when sampling from --ckpt");
  slv->add_option("--steps", slv_steps, "inference steps when sampling from --ckpt");
  slv->add_option("--sol", slv_sol, "write the incumbent assignment JSON here");
  // Table-4 style knobs
  double opt_nd_alpha = -1, opt_k0 = -1, opt_k1 = -1, opt_delta = -1, opt_pmvb_delta = -1,
         opt_pmvb_tau = -1;
  int opt_nd_k = -1, opt_apollo_k = -1;
  slv->add_option("--nd-k", opt_nd_k, "neural diving sub-MIP count K");
  slv->add_option("--nd-alpha", opt_nd_alpha, "neural diving fix fraction alpha");
  slv->add_option("--k0", opt_k0, "predict&search k0");
  slv->add_option("--k1", opt_k1, "predict&search k1");
  slv->add_option("--delta", opt_delta, "predict&search Delta");
  slv->add_option("--pmvb-delta", opt_pmvb_delta, "PMVB confidence delta");
  slv->add_option("--pmvb-tau", opt_pmvb_tau, "PMVB threshold tau");
  slv->add_option("--apollo-k", opt_apollo_k, "Apollo iterations K");

  // ---- eval
  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint with downstream strategies");
  std::string evl_ckpt, evl_dir, evl_report, evl_strategies = "nd,ps,pmvb,apollo";
  double evl_time_limit = 10.0;
  int evl_candidates = 64;
  std::uint64_t evl_seed = 0;
  evl->add_option("--ckpt", evl_ckpt, "trained checkpoint")->required();
  evl->add_option("--testset", evl_dir, "labeled dataset directory")->required();
  evl->add_option("--strategies", evl_strategies, "comma-separated strategy list");
  evl->add_option("--report", evl_report, "report output directory")->required();
  evl->add_option("--time-limit", evl_time_limit, "seconds per strategy call");
  evl->add_option("--candidates", evl_candidates, "pool size per instance");
  evl->add_option("--seed", evl_seed, "evaluation seed");

  // ---- selfcheck
  auto* chk = app.add_subcommand("selfcheck", "run the acceptance criteria");
  std::string chk_manifest;
  chk->add_option("--manifest", chk_manifest, "write the JSON pass/fail manifest here");

  CLI11_PARSE(app, argc, argv);

  try {
    HarnessConfig hc;
    if (!config_path.empty()) hc = load_harness_config(config_path);

    if (gen->parsed()) {
      std::vector<MilpInstance> instances;
      std::vector<GenSpec> specs;
      for (int i = 0; i < gen_count; ++i) {
        GenSpec spec = gen_spec;
        spec.family = family_from_string(gen_family);
        spec.seed = gen_seed + static_cast<std::uint64_t>(i);
        instances.push_back(gen_frac_cont > 0.0 ? make_mixed(spec, gen_frac_cont)
                                                : generate(spec));
        specs.push_back(spec);
      }
      write_instances(gen_out, instances, specs);
      std::cout << "wrote " << instances.size() << " instances to " << gen_out << "\n";
      return 0;
    }

    if (lab->parsed()) {
      std::vector<GenSpec> specs;
      const std::vector<MilpInstance> instances = read_instances(lab_dir, &specs);
      const auto backend = make_backend(hc.backend);
      const auto labeled = label_dataset(instances, *backend, lab_time_limit);
      write_dataset(lab_dir, labeled, specs);
      std::cout << "labeled " << labeled.size() << "/" << instances.size() << " instances\n";
      return 0;
    }

    if (trn->parsed()) {
      const auto dataset = read_dataset(trn_dir);
      Checkpoint resume;
      const bool resuming = !trn_resume.empty();
      if (resuming) resume = load_ckpt_file(trn_resume);
      const ModelConfig mcfg = resuming ? resume.model.config : hc.model;
      const TrainResult res = train(dataset, mcfg, hc.train, resuming ? &resume : nullptr);
      spit(trn_out, save_checkpoint(res.checkpoint));
      std::ostringstream curve;
      curve << "epoch,loss\n";
      for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
        curve << e << "," << res.epoch_loss[e] << "\n";
      spit(trn_curve.empty() ? trn_out + ".loss.csv" : trn_curve, curve.str());
      std::cout << "trained " << res.epoch_loss.size() << " epochs";
      if (!res.epoch_loss.empty())
        std::cout << ", loss " << res.epoch_loss.front() << " -> " << res.epoch_loss.back();
      std::cout << "\ncheckpoint: " << trn_out << "\n";
      return 0;
    }

    if (smp->parsed()) {
      const Checkpoint ckpt = load_ckpt_file(smp_ckpt);
      const MilpInstance inst = parse(slurp(smp_instance));
      GuidanceConfig gcfg = hc.guidance;
      if (smp_no_guidance) gcfg.enabled = false;
      Rng rng(smp_seed);
      const CandidatePool pool = sample_solutions(inst, ckpt.model, gcfg,
                                                  cosine_schedule(smp_steps), smp_candidates, rng);
      spit(smp_pool, save_pool(pool));
      int feasible = 0;
      double best_f = std::numeric_limits<double>::infinity();
      for (const Candidate& c : pool.candidates) {
        feasible += c.feasible;
        if (c.feasible) best_f = std::min(best_f, c.f);
      }
      std::cout << "candidates: " << pool.candidates.size() << ", feasible " << feasible;
      if (feasible > 0) std::cout << ", best feasible f " << best_f;
      std::cout << "\npool: " << smp_pool << "\n";
      return 0;
    }

    if (slv->parsed()) {
      const MilpInstance inst = parse(slurp(slv_instance));
      StrategyConfig scfg = hc.strategies;
      if (opt_nd_k > 0) scfg.nd.num_candidates = opt_nd_k;
      if (opt_nd_alpha >= 0) scfg.nd.fix_fraction = opt_nd_alpha;
      if (opt_k0 >= 0) scfg.ps.k0 = opt_k0;
      if (opt_k1 >= 0) scfg.ps.k1 = opt_k1;
      if (opt_delta >= 0) scfg.ps.delta = opt_delta;
      if (opt_pmvb_delta >= 0) scfg.pmvb.conf = opt_pmvb_delta;
      if (opt_pmvb_tau >= 0) scfg.pmvb.threshold = opt_pmvb_tau;
      if (opt_apollo_k > 0) scfg.apollo.iterations = opt_apollo_k;
      scfg.apollo.ps = {scfg.ps};

      const auto backend = make_backend(hc.backend);
      Rng rng(slv_seed);

      Checkpoint ckpt;
      const bool has_ckpt = !slv_ckpt.empty();
      if (has_ckpt) ckpt = load_ckpt_file(slv_ckpt);
      const auto sample_marginals = [&](const MilpInstance& sub) {
        Rng local = rng.fork();
        return sample_solutions(sub, ckpt.model, hc.guidance, cosine_schedule(slv_steps),
                                slv_candidates, local)
            .marginals;
      };

      Marginals marg;
      if (!slv_pool.empty()) {
        marg = load_pool(slurp(slv_pool)).marginals;
      } else if (has_ckpt) {
        marg = sample_marginals(inst);
      } else {
        throw std::runtime_error("solve needs --pool or --ckpt for marginals");
      }

      SolveResult res;
      if (slv_strategy == "nd") {
        res = neural_diving(marg, inst, scfg.nd, *backend, slv_time_limit, rng);
      } else if (slv_strategy == "ps") {
        res = predict_and_search(marg, inst, scfg.ps, *backend, slv_time_limit);
      } else if (slv_strategy == "pmvb") {
        res = pmvb(marg, inst, scfg.pmvb, *backend, slv_time_limit);
      } else if (slv_strategy == "apollo") {
        if (!has_ckpt) throw std::runtime_error("apollo re-predicts; it needs --ckpt");
        res = apollo(sample_marginals, inst, scfg.apollo, *backend, slv_time_limit);
      } else {
        throw std::runtime_error("unknown strategy '" + slv_strategy + "'");
      }
      print_result(res, inst);
      if (!slv_sol.empty() && res.assignment)
        spit(slv_sol, serialize_assignment(*res.assignment, res.objective));
      return res.assignment ? 0 : 1;
    }

    if (evl->parsed()) {
      const Checkpoint ckpt = load_ckpt_file(evl_ckpt);
      const auto testset = read_dataset(evl_dir);
      const auto backend = make_backend(hc.backend);
      EvalOptions opts;
      opts.strategies.clear();
      std::istringstream ss(evl_strategies);
      std::string name;
      while (std::getline(ss, name, ','))
        if (!name.empty()) opts.strategies.push_back(name);
      opts.strategy_time_limit_s = evl_time_limit;
      opts.n_candidates = evl_candidates;
      Rng rng(evl_seed);
      const EvalReportOut rep = evaluate_checkpoint(ckpt.model, testset, hc.strategies,
                                                    hc.guidance, *backend, opts, rng);
      fs::create_directories(evl_report);
      spit((fs::path(evl_report) / "report.csv").string(), rep.csv);
      spit((fs::path(evl_report) / "summary.txt").string(), rep.summary);
      std::cout << rep.summary;
      std::cout << "report: " << evl_report << "\n";
      return 0;
    }

    if (chk->parsed()) {
      const auto results = run_acceptance_suite(std::cout);
      const nlohmann::json manifest = selfcheck::Suite::manifest(results);
      if (!chk_manifest.empty()) spit(chk_manifest, manifest.dump(2));
      return manifest.at("pass").get<bool>() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "fmip: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
