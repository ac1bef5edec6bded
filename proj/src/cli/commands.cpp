#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "levelscore/cli.hpp"
#include "levelscore/datagen_pipeline.hpp"
#include "levelscore/error.hpp"
#include "levelscore/infotheory.hpp"
#include "levelscore/io.hpp"
#include "levelscore/kernels.hpp"
#include "levelscore/label_builders.hpp"
#include "levelscore/losses.hpp"
#include "levelscore/manifest.hpp"
#include "levelscore/metrics.hpp"
#include "levelscore/mock_clients.hpp"
#include "levelscore/parallel.hpp"
#include "levelscore/score_lattice.hpp"
#include "levelscore/toy_assessor.hpp"

#ifndef LEVELSCORE_VERSION
#define LEVELSCORE_VERSION "0.0.0"
#endif

namespace levelscore::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// JSON config files for CLI11. Top-level objects named after a subcommand hold
// that subcommand's options; scalar top-level keys address root options.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    // Run manifests double as config files; their bookkeeping keys are not options.
    for (const char* key : {"schema_version", "subcommand", "root_seed", "version", "inputs",
                            "outputs", "started_at", "wall_clock_seconds", "kernel_isa"}) {
      j.erase(key);
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, "", {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  }

  static void collect(const json& j, const std::string& name, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    if (j.is_object()) {
      if (!name.empty()) parents.push_back(name);
      for (auto it = j.begin(); it != j.end(); ++it) collect(*it, it.key(), parents, items);
      return;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = parents;
    if (j.is_array()) {
      for (const json& v : j) item.inputs.push_back(scalar(v));
    } else if (j.is_boolean()) {
      item.inputs = {j.get<bool>() ? "true" : "false"};
    } else if (!j.is_null()) {
      item.inputs = {scalar(j)};
    } else {
      return;
    }
    items.push_back(std::move(item));
  }
};

// Option results arrive as strings; keep numbers and bools typed so the
// manifest reads naturally. Replaying it as --config gives the same strings.
json typed(const std::string& s) {
  json v = json::parse(s, nullptr, false);
  if (!v.is_discarded() && (v.is_number() || v.is_boolean())) return v;
  return s;
}

// Resolved option values of one subcommand, keyed by long name.
json snapshot(const CLI::App& app) {
  json j = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->get_type_size() == 0) {
      j[name] = opt->count() > 0 && opt->as<bool>();
    } else if (opt->count() > 0) {
      const auto& r = opt->results();
      if (r.size() == 1) {
        j[name] = typed(r.front());
      } else {
        json arr = json::array();
        for (const std::string& v : r) arr.push_back(typed(v));
        j[name] = std::move(arr);
      }
    } else if (!opt->get_default_str().empty()) {
      j[name] = typed(opt->get_default_str());
    }
  }
  return j;
}

struct Artifacts {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  fs::path manifest;  // empty: no manifest
};

class Command {
 public:
  virtual ~Command() = default;
  virtual void add_options(CLI::App& sub) = 0;
  virtual Artifacts execute(std::ostream& out) = 0;

  std::uint64_t seed = 0;

 protected:
  void add_seed(CLI::App& sub, const char* help = "Root seed (recorded in the manifest)") {
    sub.add_option("--seed", seed, help);
  }
};

std::string fmt(double v) { return io::format_number(v); }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

LevelGrid load_grid(const std::string& path) {
  if (path.empty()) return LevelGrid::default_five();
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "grid file " + path + " is not valid JSON: " + e.what());
  }
  try {
    std::vector<std::string> names = j.value("names", std::vector<std::string>{});
    const double score_max = j.at("score_max").get<double>();
    if (j.contains("levels")) {
      return LevelGrid(j.at("levels").get<std::vector<double>>(), score_max, std::move(names));
    }
    return LevelGrid::uniform(j.at("k").get<std::size_t>(), j.at("first").get<double>(),
                              j.at("step").get<double>(), score_max, std::move(names));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, "grid file " + path + ": " + e.what());
  }
}

json grid_json(const LevelGrid& g) {
  return json{{"levels", std::vector<double>(g.levels().begin(), g.levels().end())},
              {"bin_width", g.bin_width()},
              {"score_max", g.score_max()},
              {"names", g.names()}};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

// labels ---------------------------------------------------------------------

class LabelsCommand : public Command {
 public:
  void add_options(CLI::App& sub) override {
    sub.add_option("--targets", targets_, "CSV of target scores (column 'score' or the first)")
        ->required();
    sub.add_option("--out", out_, "Output JSONL")->required();
    sub.add_option("--method", method_, "Label construction")
        ->check(CLI::IsMember({"sbde", "bin"}));
    sub.add_option("--mode", mode_, "SBDE mode: fixed sigma or joint (mu, sigma)")
        ->check(CLI::IsMember({"fixed", "joint"}));
    sub.add_option("--sigma", sigma_, "Fixed sigma; 0 means the bin width");
    sub.add_option("--grid", grid_, "Grid JSON file (default: five levels 1..5, M = 5)");
    sub.add_option("--threads", threads_, "Worker threads (0 = all cores)");
    add_seed(sub);
  }

  Artifacts execute(std::ostream& out) override {
    const LevelGrid grid = load_grid(grid_);
    const io::CsvTable table = io::read_csv(targets_);
    std::size_t col = 0;
    if (!table.header.empty()) {
      const auto& h = table.header;
      col = std::find(h.begin(), h.end(), "score") != h.end() ? table.column("score") : 0;
    }
    std::vector<double> xs;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      if (col >= table.rows[r].size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "line " + std::to_string(table.line_numbers[r]) + " has no score column");
      }
      xs.push_back(io::parse_number(table.rows[r][col],
                                    "line " + std::to_string(table.line_numbers[r])));
    }
    if (xs.empty()) throw Error(ErrorCode::kEmptyInput, "no targets in " + targets_);

    SolverConfig cfg;
    cfg.sigma = sigma_;
    cfg.mode = mode_ == "joint" ? SbdeMode::kJoint : SbdeMode::kFixedSigma;
    const double bin_sigma = sigma_ > 0.0 ? sigma_ : grid.bin_width();

    std::vector<std::string> lines(xs.size());
    std::vector<std::string> errors(xs.size());
    parallel_for(
        xs.size(),
        [&](std::size_t i) {
          try {
            json j = {{"schema_version", 1}, {"index", i}, {"target", xs[i]}, {"method", method_}};
            if (method_ == "sbde") {
              const SbdeResult r = sbde_estimate(xs[i], grid, cfg);
              const auto p = r.dist.probs();
              j["mode"] = mode_;
              j["mu"] = r.params.mu;
              j["sigma"] = r.params.sigma;
              j["probs"] = std::vector<double>(p.begin(), p.end());
              j["expectation"] = decode_score(r.dist, grid);
              j["residual"] = r.residual;
              j["converged"] = r.converged;
              j["clamped"] = r.clamped;
              j["iterations"] = r.iterations;
            } else {
              const ScoreDistribution d = gaussian_bin_label(xs[i], bin_sigma, grid);
              const auto p = d.probs();
              const double e = decode_score(d, grid);
              j["mu"] = xs[i];
              j["sigma"] = bin_sigma;
              j["probs"] = std::vector<double>(p.begin(), p.end());
              j["expectation"] = e;
              j["residual"] = std::abs(e - xs[i]);
            }
            lines[i] = j.dump();
          } catch (const Error& e) {
            errors[i] = "target " + std::to_string(i) + ": " + e.what();
            if (e.code() == ErrorCode::kUnreachableTarget) errors[i] = "!" + errors[i];
          }
        },
        threads_);
    for (const std::string& e : errors) {
      if (e.empty()) continue;
      if (e.front() == '!') throw Error(ErrorCode::kUnreachableTarget, e.substr(1));
      throw Error(ErrorCode::kNumeric, e);
    }
    std::string body;
    for (const std::string& l : lines) body += l + '\n';
    ensure_parent(out_);
    io::write_text_atomic(out_, body);
    out << "wrote " << lines.size() << " labels to " << out_ << "\n";
    return {{targets_}, {out_}, manifest_path_for_file(out_)};
  }

 private:
  std::string targets_, out_, grid_;
  std::string method_ = "sbde";
  std::string mode_ = "fixed";
  double sigma_ = 0.0;
  std::size_t threads_ = 0;
};

// loss-eval ------------------------------------------------------------------

class LossEvalCommand : public Command {
 public:
  void add_options(CLI::App& sub) override {
    sub.add_option("--fixture", fixture_, "JSON fixture with loss cases")->required();
    sub.add_option("--out", out_, "Write results JSON here as well as to stdout");
    add_seed(sub);
  }

  Artifacts execute(std::ostream& out) override {
    json in;
    try {
      in = json::parse(io::read_text(fixture_));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, "fixture is not valid JSON: " + std::string(e.what()));
    }
    json result;
    try {
      result = evaluate(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, "malformed fixture: " + std::string(e.what()));
    }
    const std::string text = result.dump(2) + "\n";
    out << text;
    Artifacts a{{fixture_}, {}, {}};
    if (!out_.empty()) {
      ensure_parent(out_);
      io::write_text_atomic(out_, text);
      a.outputs.push_back(out_);
      a.manifest = manifest_path_for_file(out_);
    }
    return a;
  }

 private:
  static json loss_json(const LossValue& v) {
    return json{{"value", v.diverged ? json(nullptr) : json(v.value)}, {"diverged", v.diverged}};
  }

  json evaluate(const json& in) const {
    const LevelGrid grid = in.contains("grid") ? grid_from(in.at("grid")) : LevelGrid::default_five();
    LossWeights w;
    if (in.contains("weights")) {
      w.k = in.at("weights").value("k", 1.0);
      w.k_asl = in.at("weights").value("k_asl", 1.0);
    }
    w.validate();
    json cases = json::array();
    for (const json& c : in.value("cases", json::array())) {
      json r = {{"name", c.value("name", "")}};
      const ScoreDistribution pred(c.at("predicted").get<std::vector<double>>());
      std::optional<ScoreDistribution> target;
      if (c.contains("target")) target.emplace(c.at("target").get<std::vector<double>>());
      if (target) r["kl"] = loss_json(kl_divergence(*target, pred));
      if (c.contains("x_gt")) {
        const double x = c.at("x_gt").get<double>();
        r["score_ce"] = loss_json(score_ce(pred, x, grid));
        if (target) {
          const LossValue asl = asl_loss(pred, *target, x, grid, w);
          r["asl"] = loss_json(asl);
          if (c.contains("description_ce")) {
            const double m = mat_loss(c.at("description_ce").get<double>(), asl.value, w);
            r["mat"] = std::isfinite(m) ? json(m) : json(nullptr);
          }
        }
      }
      r["decoded_score"] = decode_score(pred, grid);
      cases.push_back(std::move(r));
    }
    json seqs = json::array();
    for (const json& s : in.value("sequences", json::array())) {
      const auto dists = s.at("dists").get<std::vector<std::vector<double>>>();
      const auto tokens = s.at("tokens").get<std::vector<std::size_t>>();
      const SequenceCe ce = sequence_ce(dists, tokens);
      seqs.push_back({{"name", s.value("name", "")},
                      {"sum", ce.diverged ? json(nullptr) : json(ce.sum)},
                      {"mean", ce.diverged ? json(nullptr) : json(ce.mean)},
                      {"diverged", ce.diverged}});
    }
    return json{{"weights", {{"k", w.k}, {"k_asl", w.k_asl}}},
                {"grid", grid_json(grid)},
                {"cases", std::move(cases)},
                {"sequences", std::move(seqs)}};
  }

  static LevelGrid grid_from(const json& g) {
    const auto names = g.value("names", std::vector<std::string>{});
    if (g.contains("levels")) {
      return LevelGrid(g.at("levels").get<std::vector<double>>(), g.at("score_max").get<double>(),
                       names);
    }
    return LevelGrid::uniform(g.at("k").get<std::size_t>(), g.at("first").get<double>(),
                              g.at("step").get<double>(), g.at("score_max").get<double>(), names);
  }

  std::string fixture_, out_;
};

// eval -----------------------------------------------------------------------

class EvalCommand : public Command {
 public:
  void add_options(CLI::App& sub) override {
    sub.add_option("--input", input_, "CSV with columns id,predicted,ground_truth")->required();
    sub.add_option("--out", out_, "Summary JSON");
    add_seed(sub);
  }

  Artifacts execute(std::ostream& out) override {
    const io::CsvTable t = io::read_csv(input_);
    std::size_t pc = 1, gc = 2;
    if (!t.header.empty()) {
      pc = t.column("predicted");
      gc = t.column("ground_truth");
    } else if (!t.rows.empty() && t.rows.front().size() == 2) {
      pc = 0;
      gc = 1;
    }
    std::vector<double> pred, truth;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string where = "line " + std::to_string(t.line_numbers[r]);
      if (std::max(pc, gc) >= t.rows[r].size()) {
        throw Error(ErrorCode::kInvalidArgument, where + " has too few columns");
      }
      pred.push_back(io::parse_number(t.rows[r][pc], where));
      truth.push_back(io::parse_number(t.rows[r][gc], where));
    }
    const PairedScores pairs(pred, truth);
    const double s = srocc(pairs);
    const double p = plcc(pairs);
    out << "SROCC " << fmt(s) << "\nPLCC " << fmt(p) << "\nN " << pairs.size() << "\n";
    Artifacts a{{input_}, {}, {}};
    if (!out_.empty()) {
      const json j = {{"srocc", s}, {"plcc", p}, {"n", pairs.size()}, {"input", input_}};
      ensure_parent(out_);
      io::write_text_atomic(out_, j.dump(2) + "\n");
      a.outputs.push_back(out_);
      a.manifest = manifest_path_for_file(out_);
    }
    return a;
  }

 private:
  std::string input_, out_;
};

// bounds ---------------------------------------------------------------------

class BoundsCommand : public Command {
 public:
  void add_options(CLI::App& sub) override {
    add_seed(sub);
    sub.add_option("--trials", cfg_.trials, "Dirichlet-sampled joints");
    sub.add_option("--ci-trials", cfg_.ci_trials, "Conditionally independent joints");
    sub.add_option("--alphabet", alphabet_, "Alphabet sizes |Y|,|D|,|Z|");
    sub.add_option("--ci-tol", cfg_.ci_tol, "Independence tolerance for the CI joints");
    sub.add_option("--threads", cfg_.threads, "Worker threads (0 = all cores)");
    sub.add_option("--out-dir", out_dir_, "Directory for trials.csv and summary.json")->required();
  }

  Artifacts execute(std::ostream& out) override {
    cfg_.seed = seed;
    parse_alphabet();
    info::SweepResult res = info::run_bound_sweep(cfg_);
    const info::SweepSummary& s = res.summary;

    std::string csv =
        "index,seed,kind,h_y_given_z,h_d_given_z,h_y_given_dz,h_y_given_d,epsilon,h2_epsilon,"
        "eps_log_y,slack1,slack2,slack3\n";
    for (const info::SweepTrial& t : res.trials) {
      const info::BoundReport& r = t.report;
      csv += io::csv_line({std::to_string(t.index), std::to_string(t.seed),
                           t.conditional_independent ? "ci" : "dirichlet", fmt(r.h_y_given_z),
                           fmt(r.h_d_given_z), fmt(r.h_y_given_dz), fmt(r.h_y_given_d),
                           fmt(r.epsilon), fmt(r.h2_epsilon), fmt(r.eps_log_y), fmt(r.slack1()),
                           fmt(r.slack2()), fmt(r.slack3())}) +
             '\n';
    }
    const json summary = {
        {"seed", seed},
        {"alphabet", {cfg_.ny, cfg_.nd, cfg_.nz}},
        {"trials", s.trials},
        {"ci_trials", s.ci_trials},
        {"ci_tol", cfg_.ci_tol},
        {"theorem1_violations", s.theorem1_violations},
        {"theorem2_violations", s.theorem2_violations},
        {"theorem3_violations", s.theorem3_violations},
        {"theorem3_violation_rate", s.theorem3_violation_rate},
        {"min_slack1", s.min_slack1},
        {"min_slack2", s.min_slack2},
        {"min_slack3", s.min_slack3},
        {"mean_slack3", s.mean_slack3},
        {"max_epsilon", s.max_epsilon},
        {"max_eps0_t2_t3_gap", s.max_eps0_t2_t3_gap},
    };
    ensure_dir(out_dir_);
    const fs::path csv_path = fs::path(out_dir_) / "trials.csv";
    const fs::path sum_path = fs::path(out_dir_) / "summary.json";
    io::write_text_atomic(csv_path, csv);
    io::write_text_atomic(sum_path, summary.dump(2) + "\n");
    out << summary.dump(2) << "\n";
    return {{}, {csv_path.string(), sum_path.string()}, manifest_path_for_dir(out_dir_)};
  }

 private:
  void parse_alphabet() {
    std::vector<std::size_t> sizes;
    std::stringstream ss(alphabet_);
    std::string part;
    while (std::getline(ss, part, ',')) {
      const double v = io::parse_number(part, "--alphabet");
      if (!(v >= 1.0) || v != std::floor(v)) {
        throw Error(ErrorCode::kInvalidArgument, "--alphabet sizes must be positive integers");
      }
      sizes.push_back(static_cast<std::size_t>(v));
    }
    if (sizes.size() != 3) {
      throw Error(ErrorCode::kInvalidArgument, "--alphabet takes three sizes: |Y|,|D|,|Z|");
    }
    cfg_.ny = sizes[0];
    cfg_.nd = sizes[1];
    cfg_.nz = sizes[2];
  }

  info::SweepConfig cfg_;
  std::string alphabet_ = "5,8,8";
  std::string out_dir_;
};

// pipeline -------------------------------------------------------------------

class PipelineCommand : public Command {
 public:
  void add_options(CLI::App& sub) override {
    sub.add_option("--scores", scores_, "CSV with header image_id,score")->required();
    sub.add_option("--templates", templates_, "Template set JSON")->required();
    sub.add_option("--out", out_, "Output JSONL")->required();
    sub.add_option("--mock-seed", mock_seed_, "Seed for the mock clients (default: --seed)");
    sub.add_option("--threshold", cfg_.threshold, "Alignment needed to accept a round");
    sub.add_option("--max-rounds", cfg_.max_rounds, "Rounds per record");
    sub.add_option("--retry-budget", cfg_.retry_budget, "Extra attempts per client call");
    sub.add_flag("--accepted-only", accepted_only_, "Export accepted records only");
    sub.add_option("--grid", grid_, "Grid JSON file; its score_max bounds the scores");
    sub.add_option("--threads", threads_, "Worker threads (0 = all cores)");
    add_seed(sub);
  }

  Artifacts execute(std::ostream& out) override {
    const LevelGrid grid = load_grid(grid_);
    cfg_.score_max = grid.score_max();
    const pipeline::TemplateSet templates =
        pipeline::TemplateSet::from_json(io::read_text(templates_));
    const io::CsvTable t = io::read_csv(scores_);
    if (t.header.empty()) throw Error(ErrorCode::kConfig, scores_ + " needs a header row");
    const std::size_t ic = t.column("image_id"), sc = t.column("score");
    std::vector<std::string> ids;
    std::vector<double> scores;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string where = "line " + std::to_string(t.line_numbers[r]);
      if (std::max(ic, sc) >= t.rows[r].size()) {
        throw Error(ErrorCode::kInvalidArgument, where + " has too few columns");
      }
      ids.push_back(t.rows[r][ic]);
      scores.push_back(io::parse_number(t.rows[r][sc], where));
    }
    const pipeline::DatasetStats stats = pipeline::compute_stats(scores);

    pipeline::MockGenerator gen(mock_seed_.value_or(seed));
    pipeline::HashDiscriminator dis;
    // Both mock clients are pure functions of their arguments, so records can
    // share them across workers.
    std::vector<pipeline::SampleRecord> records(ids.size());
    parallel_for(
        ids.size(),
        [&](std::size_t i) {
          records[i] = pipeline::generate_with_verification(
              {ids[i], scores[i], stats, templates}, gen, dis, cfg_);
        },
        threads_);
    ensure_parent(out_);
    const pipeline::ExportResult ex = pipeline::export_dataset(records, out_, accepted_only_);
    const pipeline::PipelineSummary s = pipeline::summarize(records);
    const json summary = {{"total", s.total},           {"accepted", s.accepted},
                          {"failed", s.failed},         {"client_error", s.client_error},
                          {"rounds", s.rounds},         {"written", ex.written},
                          {"skipped", ex.skipped},      {"stats", {{"mean", stats.mean},
                                                                   {"median", stats.median},
                                                                   {"variance", stats.variance},
                                                                   {"count", stats.count}}}};
    out << summary.dump(2) << "\n";
    return {{scores_, templates_}, {out_}, manifest_path_for_file(out_)};
  }

 private:
  std::string scores_, templates_, out_, grid_;
  std::optional<std::uint64_t> mock_seed_;
  pipeline::PipelineConfig cfg_;
  bool accepted_only_ = false;
  std::size_t threads_ = 0;
};

// toy model commands ---------------------------------------------------------

void add_data_options(CLI::App& sub, toy::DatasetConfig& d) {
  sub.add_option("--samples", d.samples, "Synthetic samples");
  sub.add_option("--attributes", d.attributes, "Description length L");
  sub.add_option("--vocabulary", d.vocabulary, "Values per attribute V");
  sub.add_option("--features", d.features, "Feature dimension F");
  sub.add_option("--feature-noise", d.feature_noise, "Feature noise std");
  sub.add_option("--label-noise", d.label_noise, "Score noise std");
  sub.add_option("--weight-decay", d.weight_decay, "Per-position attribute weight decay");
  sub.add_option("--train-fraction", d.train_fraction, "Training split fraction");
}

void add_train_options(CLI::App& sub, toy::TrainConfig& t) {
  sub.add_option("--lr", t.learning_rate, "Gradient descent step size");
  sub.add_option("--mat-steps", t.mat_steps, "Multi-task stage steps");
  sub.add_option("--sot-steps", t.sot_steps, "Score-only stage steps");
  sub.add_option("--batch-size", t.batch_size, "Mini-batch size (0 = full batch)");
  sub.add_option("--hidden", t.hidden, "Encoder width H");
  sub.add_option("--k", t.weights.k, "KL weight inside the score loss");
  sub.add_option("--k-asl", t.weights.k_asl, "Score loss weight in the multi-task stage");
  sub.add_option("--init-scale", t.init_scale, "Encoder init scale");
}

json eval_json(const toy::EvalResult& e) {
  return json{{"count", e.count},
              {"srocc", optional_number(e.srocc)},
              {"plcc", optional_number(e.plcc)},
              {"mean_correlation", optional_number(e.mean_correlation())},
              {"degenerate", e.degenerate},
              {"description_ce", e.description_ce}};
}

std::string opt_csv(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

class ToyTrainCommand : public Command {
 public:
  void add_options(CLI::App& sub) override {
    add_seed(sub, "Seed for the dataset and the model");
    add_data_options(sub, data_);
    add_train_options(sub, train_);
    sub.add_option("--sufficiency", train_.sufficiency, "Fraction of positions supervised");
    sub.add_flag("--no-mat", no_mat_, "Skip the multi-task stage");
    sub.add_option("--grid", grid_, "Grid JSON file");
    sub.add_option("--out-dir", out_dir_, "Directory for log.csv and summary.json")->required();
  }

  Artifacts execute(std::ostream& out) override {
    const LevelGrid grid = load_grid(grid_);
    data_.seed = seed;
    train_.seed = seed;
    train_.mat_enabled = !no_mat_;
    const toy::SyntheticDataset data = toy::make_dataset(data_, grid);
    const toy::TrainResult tr = toy::train(data, grid, train_);

    std::string csv = "step,stage,description_ce,asl,total\n";
    for (const toy::TrainLogEntry& e : tr.log) {
      csv += io::csv_line({std::to_string(e.step), e.stage == toy::Stage::kMat ? "mat" : "sot",
                           opt_csv(e.description_ce), opt_csv(e.asl), fmt(e.total)}) +
             '\n';
    }
    const toy::EvalResult test = toy::evaluate(tr.model, data.test(), grid);
    const toy::EvalResult train = toy::evaluate(tr.model, data.train(), grid);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(tr.model.parameter_hash()));
    const json summary = {{"seed", seed},
                          {"steps", tr.log.size()},
                          {"train_count", data.train_count},
                          {"test_count", data.samples.size() - data.train_count},
                          {"score_coverage", toy::score_coverage(data.samples, grid)},
                          {"parameter_hash", hash},
                          {"test", eval_json(test)},
                          {"train", eval_json(train)}};
    ensure_dir(out_dir_);
    const fs::path log_path = fs::path(out_dir_) / "log.csv";
    const fs::path sum_path = fs::path(out_dir_) / "summary.json";
    io::write_text_atomic(log_path, csv);
    io::write_text_atomic(sum_path, summary.dump(2) + "\n");
    out << summary.dump(2) << "\n";
    return {{}, {log_path.string(), sum_path.string()}, manifest_path_for_dir(out_dir_)};
  }

 private:
  toy::DatasetConfig data_;
  toy::TrainConfig train_;
  bool no_mat_ = false;
  std::string grid_, out_dir_;
};

class SweepCommand : public Command {
 public:
  explicit SweepCommand(bool sufficiency)
      : sufficiency_(sufficiency),
        settings_(sufficiency ? toy::sufficiency_defaults() : toy::generation_defaults()),
        seeds_(settings_.seeds.size()) {}

  void add_options(CLI::App& sub) override {
    add_seed(sub, "First seed; seeds run from --seed to --seed + --seeds - 1");
    sub.add_option("--seeds", seeds_, "Number of seeds averaged per cell")
        ->check(CLI::PositiveNumber);
    add_data_options(sub, settings_.data);
    add_train_options(sub, settings_.train);
    if (!sufficiency_) {
      sub.add_option("--sufficiency", settings_.train.sufficiency,
                     "Fraction of positions supervised in the first stage");
    }
    sub.add_option("--threads", settings_.threads, "Worker threads (0 = all cores)");
    sub.add_option("--grid", grid_, "Grid JSON file");
    sub.add_option("--out-dir", out_dir_, "Output directory")->required();
  }

  Artifacts execute(std::ostream& out) override {
    const LevelGrid grid = load_grid(grid_);
    settings_.seeds.clear();
    for (std::size_t i = 0; i < seeds_; ++i) settings_.seeds.push_back(seed + i);
    ensure_dir(out_dir_);
    return sufficiency_ ? run_sufficiency(grid, out) : run_generation(grid, out);
  }

 private:
  Artifacts run_sufficiency(const LevelGrid& grid, std::ostream& out) {
    const toy::SufficiencyResult r = toy::sufficiency_sweep(settings_, grid);
    std::string rows =
        "rho,supervised_positions,seeds_ok,mean_srocc,mean_plcc,mean_correlation\n";
    for (const toy::SufficiencyRow& row : r.rows) {
      rows += io::csv_line({fmt(row.rho), std::to_string(row.supervised_positions),
                            std::to_string(row.seeds_ok), opt_csv(row.mean_srocc),
                            opt_csv(row.mean_plcc), opt_csv(row.mean_correlation)}) +
              '\n';
    }
    std::string cells = "rho,seed,srocc,plcc,error\n";
    for (const toy::SufficiencyCell& c : r.cells) {
      cells += io::csv_line({fmt(c.rho), std::to_string(c.seed),
                             c.eval ? opt_csv(c.eval->srocc) : "",
                             c.eval ? opt_csv(c.eval->plcc) : "", quote_free(c.error)}) +
               '\n';
    }
    const json summary = {{"seeds", settings_.seeds},
                          {"rows", r.rows.size()},
                          {"rank_correlation_rho_vs_performance",
                           optional_number(r.rank_correlation)}};
    return write(out, "sufficiency.csv", rows, cells, summary);
  }

  Artifacts run_generation(const LevelGrid& grid, std::ostream& out) {
    const toy::GenerationResult r = toy::generation_capability_sweep(settings_, grid);
    std::string rows = "fraction,mat_steps,seeds_ok,description_ce,mean_correlation\n";
    for (const toy::GenerationRow& row : r.rows) {
      rows += io::csv_line({fmt(row.fraction), std::to_string(row.mat_steps),
                            std::to_string(row.seeds_ok), fmt(row.description_ce),
                            opt_csv(row.mean_correlation)}) +
              '\n';
    }
    std::string cells = "fraction,seed,mat_steps,description_ce,srocc,plcc,error\n";
    for (const toy::GenerationCell& c : r.cells) {
      cells += io::csv_line({fmt(c.fraction), std::to_string(c.seed), std::to_string(c.mat_steps),
                             fmt(c.description_ce), c.eval ? opt_csv(c.eval->srocc) : "",
                             c.eval ? opt_csv(c.eval->plcc) : "", quote_free(c.error)}) +
               '\n';
    }
    const json summary = {{"seeds", settings_.seeds},
                          {"rows", r.rows.size()},
                          {"pearson_ce_vs_performance",
                           optional_number(r.ce_performance_correlation)},
                          {"ce_increase_violations", r.ce_increase_violations}};
    return write(out, "generation.csv", rows, cells, summary);
  }

  static std::string quote_free(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
  }

  Artifacts write(std::ostream& out, const char* name, const std::string& rows,
                  const std::string& cells, const json& summary) {
    const fs::path rows_path = fs::path(out_dir_) / name;
    const fs::path cells_path = fs::path(out_dir_) / "cells.csv";
    const fs::path sum_path = fs::path(out_dir_) / "summary.json";
    io::write_text_atomic(rows_path, rows);
    io::write_text_atomic(cells_path, cells);
    io::write_text_atomic(sum_path, summary.dump(2) + "\n");
    out << rows << summary.dump(2) << "\n";
    return {{}, {rows_path.string(), cells_path.string(), sum_path.string()},
            manifest_path_for_dir(out_dir_)};
  }

  bool sufficiency_;
  toy::SweepSettings settings_;
  std::size_t seeds_;
  std::string grid_, out_dir_;
};

// dispatch -------------------------------------------------------------------

void print_domain_error(std::ostream& err, std::string_view code, const std::string& message) {
  const json j = {{"error", {{"code", code}, {"message", message}}}};
  err << j.dump() << "\n";
}

std::vector<std::string> long_names(const CLI::App& app) {
  std::vector<std::string> out;
  for (const CLI::Option* opt : app.get_options()) {
    for (const std::string& n : opt->get_lnames()) out.push_back("--" + n);
  }
  return out;
}

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string closest_match(std::string_view word, const std::vector<std::string>& candidates) {
  const std::size_t limit = std::max<std::size_t>(2, word.size() / 3);
  std::string best;
  std::size_t best_d = limit + 1;
  for (const std::string& c : candidates) {
    const std::size_t d = edit_distance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score-level labels, losses, metrics, entropy bounds and a toy assessor",
               "levelscore"};
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", LEVELSCORE_VERSION);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; sections are named after subcommands")
      ->envname(kConfigEnv);
  app.allow_config_extras(CLI::config_extras_mode::ignore);
  app.allow_extras();

  std::string kernels_opt = "auto";
  app.add_option("--kernels", kernels_opt, "Dense kernel variant")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

  struct Entry {
    const char* name;
    const char* help;
    std::unique_ptr<Command> cmd;
    CLI::App* sub = nullptr;
  };
  std::vector<Entry> entries;
  entries.push_back({"labels", "Build score distributions from target scores",
                     std::make_unique<LabelsCommand>()});
  entries.push_back({"loss-eval", "Evaluate losses on a JSON fixture",
                     std::make_unique<LossEvalCommand>()});
  entries.push_back({"eval", "SROCC and PLCC of predicted vs ground-truth scores",
                     std::make_unique<EvalCommand>()});
  entries.push_back({"bounds", "Check the conditional-entropy bounds on random joints",
                     std::make_unique<BoundsCommand>()});
  entries.push_back({"pipeline", "Generate and verify descriptions with mock clients",
                     std::make_unique<PipelineCommand>()});
  entries.push_back({"toy-train", "Train the toy assessor once",
                     std::make_unique<ToyTrainCommand>()});
  entries.push_back({"sweep-sufficiency", "Description sufficiency sweep",
                     std::make_unique<SweepCommand>(true)});
  entries.push_back({"sweep-generation", "Description generation sweep",
                     std::make_unique<SweepCommand>(false)});
  for (Entry& e : entries) {
    e.sub = app.add_subcommand(e.name, e.help);
    e.sub->allow_extras();
    e.cmd->add_options(*e.sub);
  }

  const auto report_extras = [&](const std::vector<std::string>& extras, const Entry* chosen) {
    std::vector<std::string> candidates;
    const std::string& bad = extras.front();
    if (chosen) {
      candidates = long_names(*chosen->sub);
      for (const std::string& n : long_names(app)) candidates.push_back(n);
      err << "levelscore " << chosen->name << ": unexpected argument '" << bad << "'";
    } else {
      for (const Entry& e : entries) candidates.emplace_back(e.name);
      for (const std::string& n : long_names(app)) candidates.push_back(n);
      err << "levelscore: unknown " << (bad.rfind("-", 0) == 0 ? "option" : "subcommand") << " '"
          << bad << "'";
    }
    const std::string hint = closest_match(bad.substr(0, bad.find('=')), candidates);
    if (!hint.empty()) err << "; did you mean '" << hint << "'?";
    err << "\nRun with --help for usage.\n";
    return kExitUsage;
  };
  const auto chosen_entry = [&]() -> Entry* {
    for (Entry& e : entries) {
      if (e.sub->parsed()) return &e;
    }
    return nullptr;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const Entry* e = chosen_entry();
    out << (e ? e->sub->help() : app.help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << LEVELSCORE_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // A misspelled flag usually also leaves a required option unset; naming
    // the misspelling is the more useful message.
    const std::vector<std::string> extras = app.remaining(true);
    if (!extras.empty()) return report_extras(extras, chosen_entry());
    err << "levelscore: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  Entry* chosen = chosen_entry();
  const std::vector<std::string> extras = app.remaining(true);
  if (!extras.empty()) return report_extras(extras, chosen);
  if (chosen == nullptr) {
    err << "levelscore: a subcommand is required\n" << app.help();
    return kExitUsage;
  }

  try {
    if (kernels_opt == "auto") {
      kernels::select_auto();
    } else {
      kernels::select(kernels::parse_isa(kernels_opt));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_timestamp();
    const Artifacts a = chosen->cmd->execute(out);
    if (!a.manifest.empty()) {
      RunManifest m;
      m.subcommand = chosen->name;
      m.config = snapshot(*chosen->sub);
      m.global = {{"kernels", kernels_opt}};
      m.seed = chosen->cmd->seed;
      m.version = LEVELSCORE_VERSION;
      m.inputs = a.inputs;
      m.outputs = a.outputs;
      m.started_at = started;
      m.wall_clock_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      m.kernel_isa = std::string(kernels::to_string(kernels::active().isa));
      write_manifest(m, a.manifest);
    }
    return kExitOk;
  } catch (const Error& e) {
    print_domain_error(err, to_string(e.code()), e.what());
    return kExitDomain;
  } catch (const std::exception& e) {
    print_domain_error(err, "internal", e.what());
    return kExitDomain;
  }
}

}  // namespace levelscore::cli
