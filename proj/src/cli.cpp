#include "rlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "rlab/curriculum.hpp"
#include "rlab/dataset.hpp"
#include "rlab/dynamics.hpp"
#include "rlab/errors.hpp"
#include "rlab/gradcheck.hpp"
#include "rlab/loss.hpp"
#include "rlab/margin.hpp"
#include "rlab/noise.hpp"
#include "rlab/serialize.hpp"
#include "rlab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rlab {

namespace {

// Thrown for anything the user can fix by changing arguments or inputs.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << body;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

void emit(const std::string& dest, const std::string& body, std::ostream& out) {
  if (dest.empty() || dest == "-") {
    out << body;
  } else {
    write_file(dest, body);
  }
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Accepts inline JSON, a JSON file, or a bare family name such as "MAE".
json loss_arg(const std::string& text) {
  if (!text.empty() && text.front() != '{' && !fs::exists(text) && parse_family(text))
    return json{{"family", text}};
  return json_arg(text);
}

// ---------------------------------------------------------------- curve

struct CurveArgs {
  std::string loss;
  std::string transform = "identity";
  std::optional<double> expected_margin;
  std::size_t k = 10;
  double sigma = 1.0;
  double lo = -10.0, hi = 10.0;
  std::size_t n = 401;
  std::string out;
};

int cmd_curve(const CurveArgs& a, std::ostream& out) {
  const LossSpec loss = loss_spec_from_json(loss_arg(a.loss));
  if (!loss.standard_form())
    throw UsageError(std::string(family_name(loss.family())) + " has no sample-weighting function");
  const double e = a.expected_margin ? *a.expected_margin
                                     : std::abs(expected_init_margin({a.k, 0.0, a.sigma}));
  const WeightTransform t = WeightTransform::parse(a.transform, e);
  const WeightCurve c = sample_curve(loss, t, a.lo, a.hi, a.n);
  std::ostringstream os;
  write_curve_csv(os, c);
  emit(a.out, os.str(), out);
  return kExitOk;
}

// ---------------------------------------------------------------- initmargin

struct InitMarginArgs {
  std::size_t k = 10;
  double sigma = 1.0;
  double mu = 0.0;
  std::size_t n_mc = 100000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_initmargin(const InitMarginArgs& a, std::ostream& out) {
  const InitMarginModel m{a.k, a.mu, a.sigma};
  if (a.n_mc == 0) throw UsageError("--n-mc must be >= 1");
  const double formula = expected_init_margin(m);
  const MarginMoments mc = simulate_init_margin(m, a.n_mc, a.seed);
  const json j{{"k", a.k},          {"sigma", a.sigma},     {"mu", a.mu},
               {"n_mc", a.n_mc},    {"seed", a.seed},       {"formula", formula},
               {"mc_mean", mc.mean}, {"mc_std", mc.std}};
  emit(a.out, j.dump(2) + "\n", out);
  return kExitOk;
}

// ---------------------------------------------------------------- gradcheck

struct GradCheckArgs {
  std::string families;
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  bool inject_sign_flip = false;
};

int cmd_gradcheck(const GradCheckArgs& a, std::ostream& out) {
  if (a.trials == 0) throw UsageError("--trials must be >= 1");
  GradCheckOptions opts;
  opts.trials = a.trials;
  opts.seed = a.seed;
  const auto all = default_gradcheck_losses();
  if (a.families.empty()) {
    opts.losses = all;
  } else {
    std::stringstream ss(a.families);
    std::string name;
    while (std::getline(ss, name, ',')) {
      const auto f = parse_family(name);
      if (!f) throw UsageError("unknown family '" + name + "'");
      const LossFamily want = *f == LossFamily::RCE ? LossFamily::MAE : *f;
      const auto it = std::find_if(all.begin(), all.end(),
                                   [&](const LossSpec& l) { return l.family() == want; });
      opts.losses.push_back(*it);
    }
  }
  GradientFn fn;
  if (a.inject_sign_flip) {
    fn = [](const LossSpec& l, std::span<const double> s, std::size_t y) {
      LossEval ev = eval(l, s, y);
      for (double& g : ev.grad) g = -g;
      return ev;
    };
  }
  const auto results = run_gradcheck(opts, fn);
  bool ok = true;
  out << "family     cases  max_fd_rel   max_factor_rel  status\n";
  for (const auto& r : results) {
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %5zu  %.3e   %-14s  %s\n", r.loss.describe().c_str(),
                  r.cases, r.max_fd_error,
                  r.max_factorization_error ? fmt(*r.max_factorization_error, "%.3e").c_str() : "n/a",
                  r.passed ? "PASS" : "FAIL");
    out << line;
    ok = ok && r.passed;
  }
  out << (ok ? "all families pass\n" : "gradient check FAILED\n");
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  BlobConfig blobs;
  std::string noise;
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(GenArgs a, std::ostream& out) {
  a.blobs.seed = a.seed;
  const NoisyDataset full = make_blobs(a.blobs);
  auto [train, test] = split(full, a.test_fraction, a.seed + 1);
  json echo{{"blobs",
             {{"k", a.blobs.k},
              {"d", a.blobs.d},
              {"n_per_class", a.blobs.n_per_class},
              {"center_scale", a.blobs.center_scale},
              {"spread", a.blobs.spread},
              {"seed", a.blobs.seed}}},
            {"test_fraction", a.test_fraction},
            {"seed", a.seed}};
  if (!a.noise.empty()) {
    const NoiseSpec spec = noise_spec_from_json(json_arg(a.noise));
    train = corrupt(std::move(train), spec, a.seed + 2);
    echo["noise"] = to_json(spec);
    echo["noise_seed"] = a.seed + 2;
  }
  echo["train_size"] = train.size();
  echo["test_size"] = test.size();
  echo["observed_noise_rate"] = train.noise_rate();

  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_dataset(dir / "train.csv", train);
  save_dataset(dir / "test.csv", test);
  write_file(dir / "gen.json", echo.dump(2) + "\n");
  out << "wrote " << train.size() << " train / " << test.size() << " test samples to "
      << dir.string() << " (noise rate " << fmt(train.noise_rate(), "%.4f") << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string manifest;
  std::string data;
  std::string loss;
  std::string transform;
  std::string noise;
  std::optional<double> expected_margin;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::string> schedule;
  std::optional<double> momentum;
  std::optional<double> weight_decay;
  std::optional<std::size_t> batch_size;
  std::string hidden;
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  json m = a.manifest.empty() ? json::object() : json_arg(a.manifest);
  if (!m.is_object()) throw UsageError("manifest must be a JSON object");
  if (!a.data.empty()) m["dataset"] = a.data;
  if (!a.loss.empty()) m["loss"] = loss_arg(a.loss);
  if (!a.transform.empty()) m["transform"] = a.transform;
  if (!a.noise.empty()) m["noise"] = json_arg(a.noise);
  if (a.expected_margin) m["expected_margin_abs"] = *a.expected_margin;
  if (!a.out.empty()) m["out"] = a.out;
  if (!m.contains("train")) m["train"] = json::object();
  json& tj = m["train"];
  if (a.epochs) tj["epochs"] = *a.epochs;
  if (a.lr) tj["lr"] = *a.lr;
  if (a.schedule) tj["schedule"] = *a.schedule;
  if (a.momentum) tj["momentum"] = *a.momentum;
  if (a.weight_decay) tj["weight_decay"] = *a.weight_decay;
  if (a.batch_size) tj["batch_size"] = *a.batch_size;
  if (a.seed) {
    tj["shuffle_seed"] = *a.seed;
    m["noise_seed"] = *a.seed;
    if (!m.contains("model")) m["model"] = json::object();
    m["model"]["init_seed"] = *a.seed;
  }

  for (const char* key : {"dataset", "loss", "out"})
    if (!m.contains(key)) throw UsageError(std::string("manifest is missing '") + key + "'");

  const fs::path data = m.at("dataset").get<std::string>();
  fs::path train_path = data, test_path;
  if (fs::is_directory(data)) {
    train_path = data / "train.csv";
    test_path = data / "test.csv";
  } else if (m.contains("test")) {
    test_path = m.at("test").get<std::string>();
  }
  if (!fs::exists(train_path)) throw UsageError("training data not found: " + train_path.string());
  if (test_path.empty() || !fs::exists(test_path))
    throw UsageError("test data not found: " + test_path.string());

  NoisyDataset train = load_dataset(train_path);
  NoisyDataset test = load_dataset(test_path);
  const std::size_t k = std::max(train.num_classes, test.num_classes);
  train.num_classes = test.num_classes = k;

  if (m.contains("noise") && !m.at("noise").is_null()) {
    const NoiseSpec spec = noise_spec_from_json(m.at("noise"));
    train = corrupt(std::move(train), spec, m.value("noise_seed", std::uint64_t{0}));
  }

  const LossSpec loss = loss_spec_from_json(m.at("loss"));
  const double e_abs = m.contains("expected_margin_abs")
                           ? m.at("expected_margin_abs").get<double>()
                           : std::abs(expected_init_margin({k, 0.0, 1.0}));
  WeightTransform transform;
  if (m.contains("transform")) {
    const json& tr = m.at("transform");
    transform = tr.is_string() ? WeightTransform::parse(tr.get<std::string>(), e_abs)
                               : transform_from_json(tr);
  }

  ModelConfig model;
  if (m.contains("model") && m.at("model").contains("layer_sizes")) {
    model = model_config_from_json(m.at("model"));
  } else {
    std::vector<std::size_t> hidden{64};
    if (!a.hidden.empty()) {
      hidden.clear();
      std::stringstream ss(a.hidden);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) hidden.push_back(static_cast<std::size_t>(std::stoul(tok)));
    }
    model.layer_sizes.push_back(train.dim());
    model.layer_sizes.insert(model.layer_sizes.end(), hidden.begin(), hidden.end());
    model.layer_sizes.push_back(k);
    if (m.contains("model")) model.init_seed = m.at("model").value("init_seed", std::uint64_t{0});
  }
  const TrainConfig cfg = train_config_from_json(tj);

  const DynamicsLog log = run(train, test, Objective(loss, transform), model, cfg);

  const fs::path dir = m.at("out").get<std::string>();
  fs::create_directories(dir);
  write_file(dir / "log.json", to_json(log).dump(2) + "\n");
  std::ostringstream hist;
  write_histogram_csv(hist, log);
  write_file(dir / "histograms.csv", hist.str());
  json resolved = m;
  resolved["model"] = to_json(model);
  resolved["train"] = to_json(cfg);
  resolved["loss"] = to_json(loss);
  resolved["transform"] = to_json(transform);
  write_file(dir / "manifest.json", resolved.dump(2) + "\n");

  out << loss.describe() << " " << transform.describe() << ": train(noisy) "
      << fmt(log.final.train_acc_noisy, "%.4f") << " train(clean) "
      << fmt(log.final.train_acc_clean, "%.4f") << " test " << fmt(log.final.test_acc, "%.4f")
      << " alpha_t " << fmt(log.final.alpha_t, "%.4g") << " snr "
      << (log.final.snr ? fmt(*log.final.snr, "%.4g") : std::string("n/a")) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> logs;
  std::string format = "text";
  std::string out;
};

struct ReportRow {
  std::string name, loss, transform;
  double noise_rate, train_noisy, train_clean, test;
  std::optional<double> diff, snr;
  double alpha;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  if (a.logs.empty()) throw UsageError("report needs at least one log");
  std::vector<std::pair<std::string, DynamicsLog>> logs;
  for (const auto& p : a.logs) {
    fs::path path(p);
    if (fs::is_directory(path)) path /= "log.json";
    logs.emplace_back(path.parent_path().filename().string(),
                      dynamics_log_from_json(json_arg(path.string())));
  }
  auto key = [](const DynamicsLog& l) {
    return l.config_echo.value("loss", json()).dump() + "|" +
           l.config_echo.value("transform", json()).dump();
  };
  std::map<std::string, const DynamicsLog*> baselines;
  for (const auto& [_, l] : logs)
    if (l.final.noise_rate == 0.0 && !baselines.count(key(l))) baselines[key(l)] = &l;

  std::vector<ReportRow> rows;
  for (const auto& [name, l] : logs) {
    ReportRow r{name,
                l.config_echo.contains("loss") ? loss_spec_from_json(l.config_echo["loss"]).describe() : "?",
                l.config_echo.contains("transform")
                    ? transform_from_json(l.config_echo["transform"]).describe()
                    : "identity",
                l.final.noise_rate, l.final.train_acc_noisy, l.final.train_acc_clean,
                l.final.test_acc, std::nullopt, l.final.snr, l.final.alpha_t};
    const auto it = baselines.find(key(l));
    if (l.final.noise_rate > 0.0 && it != baselines.end()) r.diff = diff(l, *it->second);
    rows.push_back(r);
  }

  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v, "%.4f") : std::string(); };
  std::ostringstream os;
  if (a.format == "csv") {
    os << "run,loss,transform,noise_rate,train_acc_noisy,train_acc_clean,test_acc,diff,snr,alpha_t\n";
    for (const auto& r : rows)
      os << r.name << ',' << r.loss << ',' << r.transform << ',' << fmt(r.noise_rate, "%.4f") << ','
         << fmt(r.train_noisy, "%.4f") << ',' << fmt(r.train_clean, "%.4f") << ','
         << fmt(r.test, "%.4f") << ',' << opt(r.diff) << ',' << opt(r.snr) << ','
         << fmt(r.alpha, "%.4f") << '\n';
  } else if (a.format == "text") {
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %-22s %-12s %7s %9s %9s %8s %8s %8s %8s\n", "run",
                  "loss", "transform", "noise", "train(n)", "train(c)", "test", "diff", "snr",
                  "alpha_t");
    os << line;
    auto cell = [](const std::optional<double>& v) { return v ? fmt(*v, "%.4f") : std::string("-"); };
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "%-20s %-22s %-12s %7.4f %9.4f %9.4f %8.4f %8s %8s %8.4f\n",
                    r.name.c_str(), r.loss.c_str(), r.transform.c_str(), r.noise_rate,
                    r.train_noisy, r.train_clean, r.test, cell(r.diff).c_str(),
                    cell(r.snr).c_str(), r.alpha);
      os << line;
    }
  } else {
    throw UsageError("--format must be text or csv");
  }
  emit(a.out, os.str(), out);
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rlab: robust-loss curriculum laboratory"};
  app.require_subcommand(1);

  CurveArgs curve;
  auto* c = app.add_subcommand("curve", "Export a sample-weighting curve as CSV");
  c->add_option("--loss", curve.loss, "Loss spec (JSON or file)")->required();
  c->add_option("--transform", curve.transform, "identity | shift:TAU | scale:TAU");
  c->add_option("--expected-margin", curve.expected_margin, "|E[delta]| (default: formula at --k/--sigma)");
  c->add_option("--k", curve.k, "Class count for the default |E[delta]|");
  c->add_option("--sigma", curve.sigma, "Initial score std for the default |E[delta]|");
  c->add_option("--lo", curve.lo);
  c->add_option("--hi", curve.hi);
  c->add_option("--n", curve.n, "Grid points");
  c->add_option("--out", curve.out, "Output CSV (default stdout)");

  InitMarginArgs im;
  auto* i = app.add_subcommand("initmargin", "Expected initial margin: formula and Monte Carlo");
  i->add_option("--k", im.k)->required();
  i->add_option("--sigma", im.sigma);
  i->add_option("--mu", im.mu);
  i->add_option("--n-mc", im.n_mc);
  i->add_option("--seed", im.seed);
  i->add_option("--out", im.out);

  GradCheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of all loss gradients");
  g->add_option("--families", gc.families, "Comma-separated families (default all)");
  g->add_option("--trials", gc.trials, "Random cases per class count");
  g->add_option("--seed", gc.seed);
  g->add_flag("--inject-sign-flip", gc.inject_sign_flip)->group("");

  GenArgs gen;
  auto* ge = app.add_subcommand("gen", "Generate a blob dataset with optional label noise");
  ge->add_option("--k", gen.blobs.k);
  ge->add_option("--d", gen.blobs.d);
  ge->add_option("--n-per-class", gen.blobs.n_per_class);
  ge->add_option("--center-scale", gen.blobs.center_scale);
  ge->add_option("--spread", gen.blobs.spread);
  ge->add_option("--noise", gen.noise, "Noise spec (JSON or file)");
  ge->add_option("--test-fraction", gen.test_fraction);
  ge->add_option("--seed", gen.seed);
  ge->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train and log dynamics");
  t->add_option("--manifest", tr.manifest, "Run manifest (JSON or file)");
  t->add_option("--data", tr.data, "Dataset directory (train.csv, test.csv)");
  t->add_option("--loss", tr.loss, "Loss spec (JSON or file)");
  t->add_option("--transform", tr.transform, "identity | shift:TAU | scale:TAU");
  t->add_option("--expected-margin", tr.expected_margin, "|E[delta]| for the transform");
  t->add_option("--noise", tr.noise, "Re-corrupt the training labels (JSON or file)");
  t->add_option("--seed", tr.seed, "Seed for init, shuffling and noise");
  t->add_option("--epochs", tr.epochs);
  t->add_option("--lr", tr.lr);
  t->add_option("--schedule", tr.schedule)->check(CLI::IsMember({"constant", "cosine"}));
  t->add_option("--momentum", tr.momentum);
  t->add_option("--weight-decay", tr.weight_decay);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--hidden", tr.hidden, "Hidden layer sizes, e.g. 64 or 128,64");
  t->add_option("--out", tr.out, "Output directory");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Summarize run logs");
  r->add_option("logs", rep.logs, "log.json files or run directories")->required();
  r->add_option("--format", rep.format, "text | csv");
  r->add_option("--out", rep.out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c->parsed()) return cmd_curve(curve, out);
    if (i->parsed()) return cmd_initmargin(im, out);
    if (g->parsed()) return cmd_gradcheck(gc, out);
    if (ge->parsed()) return cmd_gen(gen, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (r->parsed()) return cmd_report(rep, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConstructionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnsupportedFamily& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rlab
