#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "bayesbreak/data_model.hpp"
#include "bayesbreak/metrics.hpp"
#include "bayesbreak/numeric.hpp"
#include "bayesbreak/parallel.hpp"
#include "bayesbreak/pooling.hpp"
#include "bayesbreak/prediction.hpp"
#include "bayesbreak/verify.hpp"

namespace bayesbreak::cli {

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void prepare_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
}

DataFormat parse_format(const std::string& f) {
  if (f == "csv") return DataFormat::Csv;
  if (f == "json") return DataFormat::Json;
  throw InputError("unknown data format '" + f + "' (expected csv or json)");
}

Dataset load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw InputError("no input data; pass --data or set \"data\" in the config");
  auto d = load_sequences(cfg.data, parse_format(cfg.format), cfg.family);
  if (!cfg.groups_file.empty()) load_group_labels(d, cfg.groups_file);
  return d;
}

GlmModel glm_model(const RunConfig& cfg) {
  GlmModel m;
  m.link = glm_link_for(cfg.family);
  if (cfg.family == Family::Gaussian) {
    const auto h = std::get<GaussianHyper>(cfg.hyper());
    m.dispersion = h.sigma2;
    m.prior = gaussian_glm_prior(h.nu, h.rho2);
  }
  if (cfg.glm.explicit_prior || cfg.family != Family::Gaussian) {
    if (cfg.glm.prior == "gaussian") {
      m.prior = gaussian_glm_prior(cfg.glm.location, cfg.glm.scale2);
    } else if (cfg.glm.prior == "logistic") {
      m.prior = logistic_glm_prior(cfg.glm.location, std::sqrt(cfg.glm.scale2));
    } else {
      throw InputError("glm.prior must be gaussian or logistic");
    }
  }
  return m;
}

// Prior-free table for one subject under the configured block method.
BlockEvidenceTable subject_table(const Sequence& seq, const RunConfig& cfg) {
  if (cfg.block_method == BlockMethod::Closed) return precompute_blocks(seq, cfg.hyper());
  if (cfg.family == Family::BetaObs) {
    if (cfg.block_method != BlockMethod::Quadrature) {
      throw InputError("betaobs blocks support only the closed and quadrature methods");
    }
    const auto h = std::get<BetaObsHyper>(cfg.hyper());
    return tabulate_blocks(seq.x, [&](std::size_t i, std::size_t j) {
      return quadrature_betaobs_block(std::span(seq.y).subspan(i, j - i), std::span(seq.w).subspan(i, j - i), h);
    });
  }
  return glm_table(seq, glm_model(cfg), cfg.block_method);
}

Json run_header(const RunConfig& cfg, const std::string& command) {
  Json j;
  j["command"] = command;
  j["family"] = std::string(family_name(cfg.family));
  j["hyper"] = to_json(cfg.hyper());
  j["prior"] = to_json(cfg.prior);
  j["block_method"] = block_method_name(cfg.block_method);
  j["seed"] = cfg.seed;
  return j;
}

double boundary_x(const std::vector<double>& x, std::size_t h) {
  if (h == 0) return x.front();
  if (h >= x.size()) return x.back();
  return 0.5 * (x[h - 1] + x[h]);
}

void write_marginals_tsv(const std::filesystem::path& path, const SegmentationPosterior& fit,
                         const std::vector<double>& x) {
  auto out = open_out(path);
  out << "h\tx\tevent\tevent_avg";
  for (std::size_t p = 1; p <= fit.boundary_marginals.size(); ++p) out << "\tt" << p;
  out << "\n";
  for (std::size_t h = 0; h <= x.size(); ++h) {
    out << h << "\t" << fmt(boundary_x(x, h)) << "\t" << fmt(fit.boundary_event[h]) << "\t"
        << fmt(fit.boundary_event_avg[h]);
    for (const auto& m : fit.boundary_marginals) out << "\t" << fmt(m[h]);
    out << "\n";
  }
}

void write_curve_rows(std::ostream& out, const std::string& subject, const std::vector<double>& x,
                      const BayesCurve& c) {
  for (std::size_t t = 0; t < x.size(); ++t) {
    out << subject << "\t" << fmt(x[t]) << "\t" << fmt(c.mean[t]) << "\t" << fmt(c.var[t]) << "\n";
  }
}

std::vector<Sequence> members_of(const Dataset& d, const std::vector<std::size_t>& idx) {
  std::vector<Sequence> out;
  for (std::size_t i : idx) out.push_back(d.subjects[i]);
  return out;
}

}  // namespace

FamilyHyper RunConfig::hyper() const {
  if (!hyper_json) return default_hyper(family);
  return hyper_from_json(*hyper_json, family);
}

RunConfig load_config(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  RunConfig cfg;
  try {
    reject_unknown_keys(j, {"family", "hyper", "prior", "block_method", "glm", "em", "seed", "data", "format",
                            "groups_file", "out_dir"},
                        "config");
    if (j.contains("family")) cfg.family = parse_family(j.at("family").get<std::string>());
    if (j.contains("hyper")) cfg.hyper_json = j.at("hyper");
    if (j.contains("prior")) cfg.prior = prior_config_from_json(j.at("prior"));
    if (j.contains("block_method")) cfg.block_method = parse_block_method(j.at("block_method").get<std::string>());
    if (j.contains("glm")) {
      const auto& g = j.at("glm");
      reject_unknown_keys(g, {"prior", "location", "scale2"}, "glm");
      cfg.glm.explicit_prior = true;
      cfg.glm.prior = g.value("prior", cfg.glm.prior);
      cfg.glm.location = g.value("location", cfg.glm.location);
      cfg.glm.scale2 = g.value("scale2", cfg.glm.scale2);
    }
    if (j.contains("em")) {
      const auto& e = j.at("em");
      reject_unknown_keys(e, {"groups", "restarts", "tol", "max_iter", "objective"}, "em");
      cfg.em.groups = e.value("groups", cfg.em.groups);
      cfg.em.restarts = e.value("restarts", cfg.em.restarts);
      cfg.em.tol = e.value("tol", cfg.em.tol);
      cfg.em.max_iter = e.value("max_iter", cfg.em.max_iter);
      if (e.contains("objective")) cfg.em.objective = parse_mstep_objective(e.at("objective").get<std::string>());
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.data = j.value("data", cfg.data);
    cfg.format = j.value("format", cfg.format);
    cfg.groups_file = j.value("groups_file", cfg.groups_file);
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  // relative data paths are taken from the config's directory
  const auto base = path.parent_path();
  for (std::string* p : {&cfg.data, &cfg.groups_file}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  }
  return cfg;
}

int cmd_fit(const RunConfig& cfg) {
  const auto data = load_data(cfg);
  const auto hyper = cfg.hyper();
  prepare_out_dir(cfg.out_dir);
  Json out = run_header(cfg, "fit");
  out["subjects"] = data.subject_ids;
  const auto& x = data.grid;
  const bool conjugate = cfg.block_method == BlockMethod::Closed;
  std::vector<BlockEvidenceTable> tables(data.num_subjects());
  parallel_for(tables.size(), [&](std::size_t s) { tables[s] = subject_table(data.subjects[s], cfg); });

  if (data.num_subjects() == 1 && !data.group_labels) {
    const auto fit = fit_table(tables.front(), cfg.prior);
    out["posterior"] = to_json(fit, x);
    out["boundary_calls"] = boundary_calls(fit.boundary_event_avg, 2);
    write_marginals_tsv(cfg.out_dir / "boundary_marginals.tsv", fit, x);
    auto curve = open_out(cfg.out_dir / "bayes_curve.tsv");
    curve << "subject\tx\tmean\tvar\n";
    write_curve_rows(curve, data.subject_ids.front(), x, fit.curve);
    if (conjugate) write_json_file(cfg.out_dir / "model.json", to_json(export_fit(data.subjects.front(), hyper, fit)));
  } else {
    std::vector<std::pair<int, std::vector<std::size_t>>> groups;
    if (data.group_labels) {
      for (int g = 1; g <= data.num_groups(); ++g) {
        std::vector<std::size_t> idx;
        for (std::size_t s = 0; s < data.num_subjects(); ++s) {
          if ((*data.group_labels)[s] == g) idx.push_back(s);
        }
        if (idx.empty()) throw InputError("group " + std::to_string(g) + " has no subjects");
        groups.emplace_back(g, idx);
      }
    } else {
      std::vector<std::size_t> all(data.num_subjects());
      std::iota(all.begin(), all.end(), 0);
      groups.emplace_back(1, all);
    }
    Json gj = Json::array();
    Json models = Json::array();
    auto curve = open_out(cfg.out_dir / "bayes_curve.tsv");
    curve << "subject\tx\tmean\tvar\n";
    for (const auto& [label, idx] : groups) {
      std::vector<BlockEvidenceTable> member_tables;
      for (std::size_t s : idx) member_tables.push_back(tables[s]);
      const auto fit = fit_pooled(member_tables, cfg.prior);
      Json g;
      g["group"] = label;
      std::vector<std::string> ids;
      for (std::size_t s : idx) ids.push_back(data.subject_ids[s]);
      g["members"] = ids;
      g["posterior"] = to_json(fit.posterior, x);
      g["boundary_calls"] = boundary_calls(fit.posterior.boundary_event_avg, 2);
      gj.push_back(g);
      const std::string suffix = groups.size() == 1 ? "" : "_group" + std::to_string(label);
      write_marginals_tsv(cfg.out_dir / ("boundary_marginals" + suffix + ".tsv"), fit.posterior, x);
      for (std::size_t m = 0; m < idx.size(); ++m) write_curve_rows(curve, ids[m], x, fit.subject_curves[m]);
      if (conjugate) {
        models.push_back(to_json(export_model(members_of(data, idx), hyper, fit.posterior.map.boundaries, {},
                                              std::to_string(label))));
      }
    }
    out["groups"] = gj;
    if (conjugate) write_json_file(cfg.out_dir / "models.json", models);
  }
  write_json_file(cfg.out_dir / "fit.json", out);
  return 0;
}

int cmd_em(const RunConfig& cfg) {
  const auto data = load_data(cfg);
  const auto hyper = cfg.hyper();
  prepare_out_dir(cfg.out_dir);
  EmConfig em = cfg.em;
  em.prior = cfg.prior;
  em.seed = cfg.seed;
  std::vector<BlockEvidenceTable> tables(data.num_subjects());
  parallel_for(tables.size(), [&](std::size_t s) { tables[s] = subject_table(data.subjects[s], cfg); });
  const auto prob = make_em_problem(tables, em.prior);
  const auto state = em_fit(prob, em);
  Json out = run_header(cfg, "em");
  out["groups"] = em.groups;
  out["objective"] = mstep_objective_name(em.objective);
  out["subjects"] = data.subject_ids;
  out["state"] = to_json(state, data.grid);
  if (data.group_labels) out["ari_vs_labels"] = adjusted_rand_index(*data.group_labels, hard_assignments(state));

  auto resp = open_out(cfg.out_dir / "responsibilities.tsv");
  resp << "subject";
  for (std::size_t g = 1; g <= em.groups; ++g) resp << "\tr" << g;
  resp << "\n";
  for (std::size_t s = 0; s < data.num_subjects(); ++s) {
    resp << data.subject_ids[s];
    for (double r : state.resp[s]) resp << "\t" << fmt(r);
    resp << "\n";
  }

  // pooled refits on the hard assignments
  const auto hard = hard_assignments(state);
  std::vector<std::optional<PooledFit>> refits(em.groups);
  Json models = Json::array();
  for (std::size_t g = 0; g < em.groups; ++g) {
    std::vector<std::size_t> idx;
    for (std::size_t s = 0; s < hard.size(); ++s) {
      if (hard[s] == int(g + 1)) idx.push_back(s);
    }
    if (idx.empty()) continue;
    std::vector<BlockEvidenceTable> member_tables;
    for (std::size_t s : idx) member_tables.push_back(tables[s]);
    refits[g] = fit_pooled(member_tables, cfg.prior);
    if (cfg.block_method == BlockMethod::Closed) {
      models.push_back(to_json(export_model(members_of(data, idx), hyper, refits[g]->posterior.map.boundaries, {},
                                            std::to_string(g + 1))));
    }
  }
  auto marg = open_out(cfg.out_dir / "group_marginals.tsv");
  marg << "h\tx";
  for (std::size_t g = 1; g <= em.groups; ++g) marg << "\tgroup" << g;
  marg << "\n";
  for (std::size_t h = 0; h <= data.n(); ++h) {
    marg << h << "\t" << fmt(boundary_x(data.grid, h));
    for (const auto& r : refits) marg << "\t" << (r ? fmt(r->posterior.boundary_event_avg[h]) : "nan");
    marg << "\n";
  }
  if (cfg.block_method == BlockMethod::Closed) write_json_file(cfg.out_dir / "models.json", models);
  write_json_file(cfg.out_dir / "em.json", out);
  return 0;
}

int cmd_predict(const RunConfig& cfg, const PredictOptions& opt) {
  if (opt.models.empty()) throw InputError("predict needs at least one --model file");
  std::vector<ExportedModel> models;
  for (const auto& path : opt.models) {
    for (auto& m : load_models(path)) models.push_back(std::move(m));
  }
  RunConfig dcfg = cfg;
  dcfg.family = models.front().family();
  const auto data = load_data(dcfg);
  prepare_out_dir(cfg.out_dir);
  Json out;
  out["command"] = "predict";
  out["mode"] = opt.mode;
  out["models"] = opt.models;
  if (opt.mode == "pointwise") {
    if (data.num_subjects() != 1) throw InputError("pointwise mode expects one new sequence; use units mode for several");
    out["result"] = to_json(score_pointwise(data.subjects.front(), models, opt.prior));
  } else if (opt.mode == "units") {
    std::vector<PredictionUnit> units;
    for (const auto& s : data.subjects) {
      PredictionUnit u;
      for (std::size_t t = 0; t < s.size(); ++t) {
        if (s.w[t] == 0.0) continue;
        u.x.push_back(s.x[t]);
        u.y.push_back(s.y[t]);
        u.w.push_back(s.w[t]);
      }
      if (u.x.empty()) continue;
      u.a = std::nextafter(u.x.front(), -INFINITY);
      u.b = u.x.back();
      units.push_back(std::move(u));
    }
    auto r = to_json(score_units(units, models, opt.prior));
    r["units"] = data.subject_ids;
    out["result"] = r;
  } else if (opt.mode == "map" || opt.mode == "bayes") {
    Json sig = Json::array();
    const auto& q = data.grid;
    for (const auto& m : models) {
      auto s = to_json(opt.mode == "map" ? predict_map_signal(m, q) : predict_bayes_signal(m, q), q);
      s["label"] = m.label;
      sig.push_back(s);
    }
    out["signals"] = sig;
  } else if (opt.mode == "resegment") {
    if (data.num_subjects() != 1) throw InputError("resegment mode expects one new sequence");
    std::vector<GroupConfig> groups;
    std::vector<std::string> labels;
    for (const auto& m : models) {
      groups.push_back({m.hyper, cfg.prior});
      labels.push_back(m.label);
    }
    const auto ll = rescore_by_resegmentation(data.subjects.front(), groups);
    PredictionResult r;
    r.labels = labels;
    r.log_liks = ll;
    std::vector<double> lw = ll;
    std::vector<double> prior = opt.prior.empty() ? std::vector<double>(ll.size(), 1.0) : opt.prior;
    if (prior.size() != ll.size()) throw InputError("group prior length does not match the number of models");
    for (std::size_t g = 0; g < ll.size(); ++g) lw[g] += std::log(prior[g]);
    normalize_log_weights(lw);
    r.group_posterior = lw;
    out["result"] = to_json(r);
  } else {
    throw InputError("unknown predict mode '" + opt.mode + "' (expected pointwise, units, map, bayes or resegment)");
  }
  write_json_file(cfg.out_dir / "prediction.json", out);
  return 0;
}

int cmd_verify(const RunConfig& cfg, const VerifyCliOptions& opt) {
  VerifyOptions v;
  v.instances = opt.instances;
  v.seed = cfg.seed;
  v.corrupt = opt.corrupt;
  const auto rep = run_verification(v);
  for (const auto& c : rep.checks) {
    std::cout << (c.mismatches == 0 ? "PASS " : "FAIL ") << c.name << ": " << c.cases << " cases, "
              << c.mismatches << " mismatches, max error " << c.max_error;
    if (!c.first_mismatch.empty()) std::cout << " (first: " << c.first_mismatch << ")";
    std::cout << "\n";
  }
  prepare_out_dir(cfg.out_dir);
  write_json_file(cfg.out_dir / "verify.json", to_json(rep));
  if (!rep.passed()) throw VerificationFailure("verification found mismatches (seed " + std::to_string(cfg.seed) + ")");
  return 0;
}

std::vector<BenchmarkCell> run_benchmark(const BenchmarkOptions& opt, std::uint64_t seed) {
  std::vector<BenchmarkCell> cells;
  std::mt19937_64 rng(seed);
  const GaussianHyper h{0.0, 16.0, 1.0};
  for (std::size_t n : opt.sizes) {
    SimSpec spec;
    spec.n = n;
    spec.min_gap = std::max<std::size_t>(2, n / 10);
    const auto sim = simulate(spec, rng);
    const auto& seq = sim.data.subjects.front();
    for (std::size_t k : opt.k_max) {
      PriorConfig cfg;
      cfg.k_max = k;
      std::vector<double> times;
      for (std::size_t r = 0; r < opt.reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto fit = fit_sequence(seq, h, cfg);
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        if (fit.count.k_hat == 0) throw NumericError("benchmark fit failed");
      }
      BenchmarkCell c{n, k, 0.0, 0.0, 0.0};
      std::vector<double> sorted = times;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t mid = sorted.size() / 2;
      c.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
      c.mean = std::accumulate(times.begin(), times.end(), 0.0) / double(times.size());
      for (double t : times) c.sd += (t - c.mean) * (t - c.mean);
      c.sd = times.size() > 1 ? std::sqrt(c.sd / double(times.size() - 1)) : 0.0;
      cells.push_back(c);
    }
  }
  return cells;
}

double loglog_slope(const std::vector<BenchmarkCell>& cells, std::size_t k_max) {
  std::vector<double> lx, ly;
  for (const auto& c : cells) {
    if (c.k_max != k_max) continue;
    lx.push_back(std::log(double(c.n)));
    ly.push_back(std::log(c.median));
  }
  if (lx.size() < 2) return NAN;
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / double(lx.size());
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / double(ly.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

int cmd_benchmark(const RunConfig& cfg, const BenchmarkOptions& opt) {
  prepare_out_dir(cfg.out_dir);
  Json out;
  out["command"] = "benchmark";
  out["seed"] = cfg.seed;
  out["threads"] = worker_count();
  const auto cells = run_benchmark(opt, cfg.seed);
  auto tsv = open_out(cfg.out_dir / "benchmark.tsv");
  tsv << "n\tk_max\treps\tmean_s\tsd_s\tmedian_s\n";
  for (const auto& c : cells) {
    tsv << c.n << "\t" << c.k_max << "\t" << opt.reps << "\t" << fmt(c.mean) << "\t" << fmt(c.sd) << "\t"
        << fmt(c.median) << "\n";
  }
  Json slopes = Json::object();
  for (std::size_t k : opt.k_max) slopes[std::to_string(k)] = number(loglog_slope(cells, k));
  out["loglog_slope"] = slopes;
  std::cout << "n\tk_max\tmean_s\tsd_s\n";
  for (const auto& c : cells) std::cout << c.n << "\t" << c.k_max << "\t" << fmt(c.mean) << "\t" << fmt(c.sd) << "\n";

  if (opt.tradeoff) {
    // accuracy against quadrature and cost of every block method on logistic data
    std::mt19937_64 rng(cfg.seed + 7);
    SimSpec spec = default_sim_spec(Family::Binomial);
    spec.n = opt.tradeoff_n;
    spec.min_gap = std::max<std::size_t>(2, spec.n / 8);
    spec.trials = 10;
    const auto sim = simulate(spec, rng);
    const auto& seq = sim.data.subjects.front();
    const GlmModel model;
    PriorConfig pc;
    pc.k_max = 6;
    auto tt = open_out(cfg.out_dir / "tradeoff.tsv");
    tt << "method\tmean_abs_dlog_evidence\tboundary_f1\twall_s\n";
    Json tj = Json::array();
    std::optional<BlockEvidenceTable> ref_table;
    for (auto m : {BlockMethod::Quadrature, BlockMethod::Laplace, BlockMethod::JJ, BlockMethod::PGVB, BlockMethod::EP}) {
      const auto s0 = std::chrono::steady_clock::now();
      const auto table = glm_table(seq, model, m);
      const auto fit = fit_table(table, pc);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
      if (!ref_table) ref_table = table;
      double err = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < table.log_A0.raw().size(); ++i) {
        const double d = table.log_A0.raw()[i] - ref_table->log_A0.raw()[i];
        if (std::isfinite(d)) {
          err += std::abs(d);
          ++count;
        }
      }
      err = count ? err / double(count) : 0.0;
      const double f1 = boundary_f1(sim.boundaries, boundary_calls(fit.boundary_event_avg, 2), 2).f1;
      tt << block_method_name(m) << "\t" << fmt(err) << "\t" << fmt(f1) << "\t" << fmt(secs) << "\n";
      tj.push_back({{"method", block_method_name(m)}, {"mean_abs_dlog_evidence", err}, {"boundary_f1", f1},
                    {"wall_s", secs}});
    }
    out["tradeoff"] = tj;
  }
  write_json_file(cfg.out_dir / "benchmark.json", out);
  return 0;
}

CalibrationRun run_calibration(const CalibrateOptions& opt, std::uint64_t seed) {
  CalibrationRun run;
  std::mt19937_64 rng(seed);
  SimSpec spec;
  spec.n = opt.n;
  spec.jumps = opt.jumps;
  spec.sigma = opt.sigma;
  spec.jump = opt.snr;
  spec.min_gap = std::max<std::size_t>(2, opt.n / 10);
  // prior on segment levels matched to the generator's spread
  const GaussianHyper h{0.0, opt.snr * opt.snr * opt.sigma * opt.sigma, opt.sigma * opt.sigma};
  PriorConfig cfg;
  cfg.k_max = std::min<std::size_t>(opt.n, opt.jumps + 4);
  std::vector<Sequence> seqs;
  std::vector<std::vector<std::size_t>> truth;
  for (std::size_t r = 0; r < opt.reps; ++r) {
    auto sim = simulate(spec, rng);
    seqs.push_back(sim.data.subjects.front());
    truth.push_back(sim.boundaries);
  }
  std::vector<std::vector<double>> probs(opt.reps);
  parallel_for(opt.reps, [&](std::size_t r) { probs[r] = fit_sequence(seqs[r], h, cfg).boundary_event_avg; });
  for (std::size_t r = 0; r < opt.reps; ++r) {
    for (std::size_t hh = 1; hh < opt.n; ++hh) {
      run.prob.push_back(probs[r][hh]);
      run.outcome.push_back(std::find(truth[r].begin(), truth[r].end(), hh) != truth[r].end());
    }
  }
  return run;
}

int cmd_calibrate(const RunConfig& cfg, const CalibrateOptions& opt) {
  if (opt.reps == 0 || opt.n < 2) throw InputError("calibrate needs reps >= 1 and n >= 2");
  prepare_out_dir(cfg.out_dir);
  const auto run = run_calibration(opt, cfg.seed);
  const auto cal = reliability(run.prob, run.outcome, opt.bins);
  auto tsv = open_out(cfg.out_dir / "reliability.tsv");
  tsv << "lower\tupper\tcount\tmean_pred\tfrequency\n";
  for (const auto& b : cal.bins) {
    tsv << fmt(b.lower) << "\t" << fmt(b.upper) << "\t" << b.count << "\t" << fmt(b.mean_pred) << "\t"
        << fmt(b.frequency) << "\n";
  }
  Json out;
  out["command"] = "calibrate";
  out["seed"] = cfg.seed;
  out["reps"] = opt.reps;
  out["n"] = opt.n;
  out["snr"] = opt.snr;
  out["ece"] = cal.ece;
  out["rank_corr"] = number(cal.rank_corr);
  write_json_file(cfg.out_dir / "calibration.json", out);
  std::cout << "ECE " << fmt(cal.ece) << ", bin rank correlation " << fmt(cal.rank_corr) << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const SimSpec& spec) {
  prepare_out_dir(cfg.out_dir);
  std::mt19937_64 rng(cfg.seed);
  const auto sim = simulate(spec, rng);
  save_csv(sim.data, cfg.out_dir / "data.csv");
  Json truth;
  truth["family"] = std::string(family_name(spec.family));
  truth["seed"] = cfg.seed;
  truth["n"] = spec.n;
  truth["subjects"] = spec.subjects;
  truth["boundaries"] = sim.boundaries;
  Json signal = Json::array();
  for (double v : sim.signal) signal.push_back(number(v));
  truth["signal"] = signal;
  write_json_file(cfg.out_dir / "truth.json", truth);
  return 0;
}

}  // namespace bayesbreak::cli
