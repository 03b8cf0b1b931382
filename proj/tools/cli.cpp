#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sevridge/cohort.hpp"
#include "sevridge/error.hpp"
#include "sevridge/evalharness.hpp"
#include "sevridge/ridge.hpp"
#include "sevridge/text_io.hpp"
#include "sevridge/triage.hpp"

namespace sevridge::cli {

namespace {

constexpr const char* kSeedEnv = "SEVERITY_RIDGE_SEED";

struct RidgeFlags {
  RidgeConfig config;
  double alpha_init = 0;
  double lambda_init = 0;
  bool no_intercept = false;
  bool fixed = false;

  RidgeConfig resolve(const CLI::App& app) const {
    RidgeConfig c = config;
    if (app.count("--alpha-init")) c.alpha_init = alpha_init;
    if (app.count("--lambda-init")) c.lambda_init = lambda_init;
    c.fit_intercept = !no_intercept;
    c.update_hyperparams = !fixed;
    return c;
  }
};

void add_ridge_options(CLI::App* app, RidgeFlags& f) {
  app->add_option("--alpha1", f.config.alpha_1, "Gamma shape of the noise-precision prior")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--alpha2", f.config.alpha_2, "Gamma rate of the noise-precision prior")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--lambda1", f.config.lambda_1, "Gamma shape of the weight-precision prior")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--lambda2", f.config.lambda_2, "Gamma rate of the weight-precision prior")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--alpha-init", f.alpha_init,
                  "Initial noise precision (default: 1/Var(y))")
      ->check(CLI::PositiveNumber);
  app->add_option("--lambda-init", f.lambda_init,
                  "Initial weight precision (default: 1/Var(y))")
      ->check(CLI::PositiveNumber);
  app->add_option("--tol", f.config.tol, "Stop when the L1 coefficient change drops below this")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--max-iter", f.config.max_iter, "Maximum evidence iterations")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app->add_flag("--no-intercept", f.no_intercept, "Fit without an intercept (no centering)");
  app->add_flag("--fixed-hyperparams", f.fixed,
                "Single posterior solve at the initial precisions");
}

void add_seed_option(CLI::App* app, std::uint64_t& seed) {
  app->add_option("--seed", seed, "Master seed (env SEVERITY_RIDGE_SEED)")
      ->capture_default_str()
      ->envname(kSeedEnv);
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void print_report(std::ostream& out, const char* name, const EvalReport& r) {
  out << name << ": mse=" << format_double(r.mse) << " nmse=" << format_double(r.nmse)
      << " r2=" << format_double(r.r2) << " n_test=" << r.n_test << '\n';
}

void print_model(std::ostream& out, const RidgeModel& m) {
  out << "iterations: " << m.n_iter << (m.converged ? " (converged)" : " (not converged)")
      << '\n'
      << "alpha: " << format_double(m.alpha) << '\n'
      << "lambda: " << format_double(m.lambda) << '\n'
      << "effective_dof: " << format_double(m.effective_dof) << '\n'
      << "intercept: " << format_double(m.intercept) << '\n'
      << "coefficients (Weight, Age, Virion Count, Gender):";
  for (double c : m.coefficients) out << ' ' << format_double(c);
  out << '\n';
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

Split split_rows(std::size_t rows, double fraction, std::uint64_t seed) {
  return train_test_split(rows, {fraction, seed});
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v.at(i));
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic infant RSV severity cohorts and Bayesian ridge regression",
               "sevridge"};
  app.set_config("--config", "", "TOML/INI file whose keys mirror the flags (flags win)");
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default();

  // generate
  GenerationConfig gen_cfg;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Generate a labeled cohort as three CSV files");
  gen->add_option("--n", gen_cfg.n_samples, "Number of samples")
      ->capture_default_str()->check(CLI::PositiveNumber);
  add_seed_option(gen, gen_cfg.master_seed);
  gen->add_option("--out-dir", gen_out, "Output directory")->required();
  gen->add_option("--threads", gen_cfg.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();

  // fit
  std::string fit_x, fit_y, fit_model_out;
  RidgeFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a Bayesian ridge model");
  fit_cmd->add_option("--x", fit_x, "Feature CSV (Weight,Age,Virion Count,Gender)")
      ->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--y", fit_y, "Target CSV (Severity)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--model-out", fit_model_out, "Model file to write")->required();
  add_ridge_options(fit_cmd, fit_flags);

  // evaluate
  std::string ev_x, ev_yp, ev_yn, ev_model;
  double ev_fraction = 0.2;
  std::uint64_t ev_seed = 42;
  bool ev_stratify = false;
  std::vector<int> ev_cutoffs = AgeBuckets::standard().cutoffs;
  RidgeFlags ev_flags;
  auto* ev = app.add_subcommand(
      "evaluate", "Split, fit on noisy training targets and score against both target kinds");
  ev->add_option("--x", ev_x, "Feature CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--y-precise", ev_yp, "Precise target CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--y-noisy", ev_yn, "Noisy target CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--model", ev_model,
                 "Score this saved model on every row instead of splitting and fitting")
      ->check(CLI::ExistingFile);
  ev->add_option("--test-fraction", ev_fraction, "Held-out fraction")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  add_seed_option(ev, ev_seed);
  ev->add_flag("--stratify", ev_stratify, "Also fit one model per age bucket");
  ev->add_option("--age-cutoffs", ev_cutoffs, "Ascending bucket cutoffs in months")
      ->capture_default_str()->delimiter(',');
  add_ridge_options(ev, ev_flags);

  // experiment
  ExperimentConfig ex_cfg;
  std::string ex_out;
  RidgeFlags ex_flags;
  auto* ex = app.add_subcommand("experiment", "Repeat generate/split/fit/evaluate and chart it");
  ex->add_option("--n", ex_cfg.n_samples, "Samples per iteration")
      ->capture_default_str()->check(CLI::PositiveNumber);
  ex->add_option("--iterations", ex_cfg.iterations, "Number of iterations")
      ->capture_default_str()->check(CLI::PositiveNumber);
  add_seed_option(ex, ex_cfg.base_seed);
  ex->add_option("--test-fraction", ex_cfg.test_fraction, "Held-out fraction")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  ex->add_option("--out-dir", ex_out, "Directory for report.csv, mse.svg, r2.svg")->required();
  ex->add_option("--threads", ex_cfg.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();
  add_ridge_options(ex, ex_flags);

  // predict
  std::string pr_model, pr_x, pr_out;
  bool pr_std = false;
  auto* pr = app.add_subcommand("predict", "Predict severities for a feature CSV");
  pr->add_option("--model", pr_model, "Model file")->required()->check(CLI::ExistingFile);
  pr->add_option("--x", pr_x, "Feature CSV")->required()->check(CLI::ExistingFile);
  pr->add_flag("--with-std", pr_std, "Add a predictive standard deviation column");
  pr->add_option("--out", pr_out, "Write to this file instead of stdout");

  // triage
  std::string tr_model, tr_x, tr_plan, tr_plan_out, tr_out;
  std::size_t tr_k = 3;
  auto* tr = app.add_subcommand("triage", "Bucket predicted severities into priority groups");
  tr->add_option("--model", tr_model, "Model file")->required()->check(CLI::ExistingFile);
  tr->add_option("--x", tr_x, "Feature CSV")->required()->check(CLI::ExistingFile);
  tr->add_option("--k", tr_k, "Number of groups when building a plan")
      ->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--plan", tr_plan, "Use this plan instead of building one")
      ->check(CLI::ExistingFile);
  tr->add_option("--plan-out", tr_plan_out, "Save the plan that was used");
  tr->add_option("--out", tr_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  } catch (const CLI::Error& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (gen->parsed()) {
      const auto samples = generate(gen_cfg);
      std::error_code ec;
      std::filesystem::create_directories(gen_out, ec);
      if (ec) throw IoError("cannot create directory " + gen_out);
      write_dataset(samples, DatasetPaths::in_directory(gen_out));
      out << "wrote " << samples.size() << " samples to " << gen_out << '\n';
    } else if (fit_cmd->parsed()) {
      const auto records = read_x_csv(fit_x);
      const auto y = read_y_csv(fit_y);
      if (y.size() != records.size()) {
        throw sevridge::ParseError(fit_y, std::min(y.size(), records.size()) + 2, 1,
                                   "row count does not match " + fit_x);
      }
      const RidgeModel model =
          fit(design_matrix(records), to_vector(y), fit_flags.resolve(*fit_cmd));
      save_model(model, fit_model_out);
      print_model(out, model);
    } else if (ev->parsed()) {
      const auto samples = read_dataset({ev_x, ev_yp, ev_yn});
      std::vector<PatientRecord> records;
      std::vector<double> yp, yn;
      std::vector<int> ages;
      for (const auto& s : samples) {
        records.push_back(s.record);
        yp.push_back(s.severity_precise);
        yn.push_back(s.severity_noisy);
        ages.push_back(s.record.age_months);
      }
      if (!ev_model.empty()) {
        const RidgeModel model = load_model(ev_model);
        const EvalPair r = evaluate(model, design_matrix(records), yp, yn);
        print_report(out, "precise", r.precise);
        print_report(out, "noisy", r.noisy);
        return kExitOk;
      }
      const Split split = split_rows(samples.size(), ev_fraction, ev_seed);
      const auto train_rec = pick(records, split.train);
      const auto test_rec = pick(records, split.test);
      const Matrix X_train = design_matrix(train_rec);
      const Matrix X_test = design_matrix(test_rec);
      const Vector y_train = to_vector(pick(yn, split.train));
      const auto test_p = pick(yp, split.test);
      const auto test_n = pick(yn, split.test);
      const RidgeConfig cfg = ev_flags.resolve(*ev);
      const RidgeModel model = fit(X_train, y_train, cfg);
      const EvalPair r = evaluate(model, X_test, test_p, test_n);
      print_report(out, "precise", r.precise);
      print_report(out, "noisy", r.noisy);

      if (ev_stratify) {
        const AgeBuckets buckets{ev_cutoffs};
        const auto train_ages = pick(ages, split.train);
        const auto test_ages = pick(ages, split.test);
        const StratifiedModel strat = fit_stratified(X_train, y_train, train_ages, cfg, buckets);
        const Vector strat_pred = strat.predict(X_test, test_ages);
        const Vector pooled_pred = predict(model, X_test);
        out << "bucket,n_test,r2_pooled,r2_stratified\n";
        for (std::size_t b = 0; b < buckets.size(); ++b) {
          std::vector<double> truth, pooled, stratified;
          for (std::size_t i = 0; i < test_ages.size(); ++i) {
            if (buckets.bucket_of(test_ages[i]) != b) continue;
            truth.push_back(test_p[i]);
            pooled.push_back(pooled_pred(static_cast<Eigen::Index>(i)));
            stratified.push_back(strat_pred(static_cast<Eigen::Index>(i)));
          }
          out << buckets.label(b) << ',' << truth.size() << ','
              << format_double(sevridge::r2(truth, pooled)) << ','
              << format_double(sevridge::r2(truth, stratified)) << '\n';
        }
      }
    } else if (ex->parsed()) {
      ex_cfg.ridge = ex_flags.resolve(*ex);
      const ExperimentReport report = run_experiment(ex_cfg);
      emit_report(report, ex_out);
      out << "iterations: " << report.iterations.size() << '\n';
      out << "mean (precise): mse=" << format_double(report.mean_precise.mse)
          << " nmse=" << format_double(report.mean_precise.nmse)
          << " r2=" << format_double(report.mean_precise.r2) << '\n';
      out << "mean (noisy): mse=" << format_double(report.mean_noisy.mse)
          << " nmse=" << format_double(report.mean_noisy.nmse)
          << " r2=" << format_double(report.mean_noisy.r2) << '\n';
    } else if (pr->parsed()) {
      const RidgeModel model = load_model(pr_model);
      const Matrix X = design_matrix(read_x_csv(pr_x));
      std::string text = pr_std ? "Severity,Std\n" : "Severity\n";
      if (pr_std) {
        const PredictionWithStd p = predict_with_std(model, X);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
          text += format_double(p.mean(i)) + ',' + format_double(p.std(i)) + '\n';
        }
      } else {
        const Vector p = predict(model, X);
        for (double v : p) text += format_double(v) + '\n';
      }
      emit(text, pr_out, out);
    } else if (tr->parsed()) {
      const RidgeModel model = load_model(tr_model);
      const Vector severities = predict(model, design_matrix(read_x_csv(tr_x)));
      TriagePlan plan;
      if (!tr_plan.empty()) {
        plan = load_plan(tr_plan);
      } else {
        std::vector<std::string> warnings;
        plan = build_plan(as_span(severities), tr_k, &warnings);
        for (const auto& w : warnings) err << "warning: " << w << '\n';
      }
      if (!tr_plan_out.empty()) save_plan(plan, tr_plan_out);
      std::string text = "severity,label\n";
      for (double s : severities) text += format_double(s) + ',' + assign(plan, s) + '\n';
      emit(text, tr_out, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace sevridge::cli
