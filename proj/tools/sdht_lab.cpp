// Batch experiment runner. Reads a JSON config, runs one command, and writes
// results.csv / summary.json (plus plot.svg for sweep commands) into the
// output directory. Exit codes: 0 success, 2 invalid input, 3 a declared
// bound or verification check failed. Every failure also writes error.json.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plot.hpp"
#include "sdht/bounds.hpp"
#include "sdht/channel.hpp"
#include "sdht/engine.hpp"
#include "sdht/errors.hpp"
#include "sdht/io.hpp"
#include "sdht/prob.hpp"
#include "sdht/psm.hpp"
#include "sdht/rng.hpp"
#include "sdht/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdht;

namespace {

struct RunContext {
  std::string command;
  std::string mode = "exact";  // "exact" or "mc"
  uint64_t seed = 0;
  uint64_t trials = 100000;
  unsigned threads = 1;
  json parameters;
};

struct Artifacts {
  std::string results_csv;
  json results;
  std::string plot_svg;  // empty when the command has no plot
  int exit_code = 0;
  std::string failure;   // set when exit_code != 0
};

std::string u64_str(uint64_t v) { return std::to_string(v); }

std::vector<FiniteDistribution> parse_distribution_list(const json& arr,
                                                        const char* name) {
  if (!arr.is_array() || arr.empty()) {
    throw precondition_error(std::string(name) +
                             " must be a non-empty array of probability "
                             "vectors");
  }
  std::vector<FiniteDistribution> out;
  out.reserve(arr.size());
  for (const auto& row : arr) {
    out.emplace_back(row.get<std::vector<double>>());
  }
  return out;
}

Channel channel_from_param(const json& v) {
  if (v.is_string()) {
    return channel_from_json_text(read_text_file(v.get<std::string>()));
  }
  if (v.is_array()) {
    json wrapped;
    wrapped["rows"] = v;
    return channel_from_json_text(wrapped.dump());
  }
  return channel_from_json_text(v.dump());
}

json report_to_json(const EvaluationReport& rep) {
  json j;
  j["epsilon"] = rep.epsilon;
  j["delta"] = rep.delta;
  j["comm_bits"] = rep.comm_bits;
  j["key_bits"] = rep.key_bits;
  j["method"] = rep.method;
  if (rep.trials) j["trials"] = *rep.trials;
  if (rep.seed) j["seed"] = *rep.seed;
  if (rep.epsilon_stderr) j["epsilon_stderr"] = *rep.epsilon_stderr;
  j["warnings"] = rep.warnings;
  return j;
}

// ---- evaluate-scheme / sweep-n ---------------------------------------------

KeyedScheme build_scheme(const json& prm,
                         const std::vector<FiniteDistribution>& h0,
                         const std::vector<FiniteDistribution>& h1,
                         uint32_t n) {
  const std::string kind = prm.value("scheme", std::string("one-bit"));
  if (kind == "one-bit") {
    if (h0.size() != 2 || h1.size() != 1) {
      throw precondition_error(
          "one-bit scheme needs h0 with two members and h1 with one");
    }
    return build_one_bit_scheme(h0[0], h0[1], h1[0], n);
  }
  if (kind == "separating") {
    if (prm.contains("channel")) {
      return build_separating_scheme(channel_from_param(prm.at("channel")), h0,
                                     h1, n);
    }
    if (h0.size() == 2 && h1.size() == 1) {
      return build_separating_scheme(separating_channel(h0[0], h0[1], h1[0]),
                                     h0, h1, n);
    }
    throw precondition_error(
        "separating scheme needs an explicit \"channel\" unless h0 has two "
        "members and h1 one");
  }
  throw precondition_error("unknown scheme kind: " + kind);
}

EvaluationReport run_evaluation(const RunContext& ctx, const KeyedScheme& s,
                                const std::vector<FiniteDistribution>& h0,
                                const std::vector<FiniteDistribution>& h1) {
  if (ctx.mode == "mc") {
    return monte_carlo_evaluate(s, h0, h1, ctx.trials, ctx.seed, ctx.threads);
  }
  return evaluate(s, h0, h1);
}

const char* kSchemeCsvHeader[] = {"n", "epsilon", "delta", "comm_bits",
                                  "key_bits"};

std::string scheme_csv_row(uint32_t n, const EvaluationReport& rep) {
  return csv_row({u64_str(n), format_double(rep.epsilon),
                  format_double(rep.delta), u64_str(rep.comm_bits),
                  u64_str(rep.key_bits)});
}

Artifacts cmd_evaluate_scheme(const RunContext& ctx) {
  const json& prm = ctx.parameters;
  const auto h0 = parse_distribution_list(prm.at("h0"), "h0");
  const auto h1 = parse_distribution_list(prm.at("h1"), "h1");
  const auto n = prm.at("n").get<uint32_t>();
  const KeyedScheme scheme = build_scheme(prm, h0, h1, n);
  const EvaluationReport rep = run_evaluation(ctx, scheme, h0, h1);

  Artifacts art;
  art.results_csv = csv_row({kSchemeCsvHeader[0], kSchemeCsvHeader[1],
                             kSchemeCsvHeader[2], kSchemeCsvHeader[3],
                             kSchemeCsvHeader[4]});
  art.results_csv += scheme_csv_row(n, rep);
  art.results = report_to_json(rep);
  art.results["n"] = n;
  art.results["detector"] = scheme.detector.name;
  return art;
}

Artifacts cmd_sweep_n(const RunContext& ctx) {
  const json& prm = ctx.parameters;
  const auto h0 = parse_distribution_list(prm.at("h0"), "h0");
  const auto h1 = parse_distribution_list(prm.at("h1"), "h1");
  const auto n_values = prm.at("n_values").get<std::vector<uint32_t>>();
  if (n_values.empty()) {
    throw precondition_error("sweep-n: n_values must be non-empty");
  }

  Artifacts art;
  art.results_csv = csv_row({kSchemeCsvHeader[0], kSchemeCsvHeader[1],
                             kSchemeCsvHeader[2], kSchemeCsvHeader[3],
                             kSchemeCsvHeader[4]});
  json points = json::array();
  sdht_lab::PlotSeries eps_series;
  eps_series.label = "epsilon";
  std::vector<double> xs;
  std::vector<double> log_eps;
  bool all_positive = true;

  for (uint32_t n : n_values) {
    const KeyedScheme scheme = build_scheme(prm, h0, h1, n);
    const EvaluationReport rep = run_evaluation(ctx, scheme, h0, h1);
    art.results_csv += scheme_csv_row(n, rep);
    json p = report_to_json(rep);
    p["n"] = n;
    points.push_back(p);
    eps_series.points.push_back({static_cast<double>(n), rep.epsilon});
    if (rep.epsilon > 0.0) {
      xs.push_back(static_cast<double>(n));
      log_eps.push_back(std::log(rep.epsilon));
    } else {
      all_positive = false;
    }
  }

  art.results["sweep"] = points;
  if (all_positive && n_values.size() >= 2) {
    const LinearFit fit = linear_fit(xs, log_eps);
    art.results["log_epsilon_fit"] = {{"slope", fit.slope},
                                      {"intercept", fit.intercept},
                                      {"r_squared", fit.r_squared}};
  }
  art.plot_svg = sdht_lab::render_line_plot(
      "Correctness error vs number of clients", "n", "epsilon", true,
      {eps_series});
  return art;
}

// ---- verify-psm -------------------------------------------------------------

BooleanFormula parse_formula(const json& node) {
  if (!node.is_array() || node.empty() || !node[0].is_string()) {
    throw precondition_error(
        "formula nodes are arrays [\"leaf\"|\"not\"|\"and\"|\"or\", ...]");
  }
  const std::string op = node[0].get<std::string>();
  if (op == "leaf") {
    if (node.size() < 2) {
      throw precondition_error("leaf node needs a client index");
    }
    const auto client = node[1].get<std::size_t>();
    const std::size_t bit = node.size() > 2 ? node[2].get<std::size_t>() : 0;
    return BooleanFormula::leaf(client, bit);
  }
  if (op == "not") {
    if (node.size() != 2) throw precondition_error("not node takes one child");
    return BooleanFormula::negation(parse_formula(node[1]));
  }
  if (node.size() != 3) {
    throw precondition_error(op + " node takes two children");
  }
  if (op == "and") {
    return BooleanFormula::conjunction(parse_formula(node[1]),
                                       parse_formula(node[2]));
  }
  if (op == "or") {
    return BooleanFormula::disjunction(parse_formula(node[1]),
                                       parse_formula(node[2]));
  }
  throw precondition_error("unknown formula op: " + op);
}

std::vector<int> table_of_program(const PermBranchingProgram& program) {
  uint64_t total = 1;
  for (uint64_t s : program.input_sizes) {
    if (s == 0 || total > kEnumerationBudget / s) {
      throw budget_error("verify-psm: input space too large to tabulate");
    }
    total *= s;
  }
  std::vector<int> f(total);
  std::vector<uint32_t> coords(program.input_sizes.size(), 0);
  for (uint64_t flat = 0; flat < total; ++flat) {
    uint64_t r = flat;
    for (std::size_t i = 0; i < coords.size(); ++i) {
      coords[i] = static_cast<uint32_t>(r % program.input_sizes[i]);
      r /= program.input_sizes[i];
    }
    const uint32_t g = program_product(program, coords);
    f[flat] = (g == program.accept_element) ? 1 : 0;
  }
  return f;
}

struct BuiltProtocol {
  PsmProtocol protocol;
  std::vector<int> f_table;
  json facts;
};

BuiltProtocol build_protocol(const json& prm) {
  const std::string kind = prm.at("protocol").get<std::string>();
  BuiltProtocol built;
  built.facts["protocol"] = kind;
  if (kind == "fkn") {
    const auto table = prm.at("truth_table").get<std::vector<std::vector<int>>>();
    built.protocol = fkn_two_party(table);
    const std::size_t s1 = table.size();
    const std::size_t s2 = table.front().size();
    built.f_table.resize(s1 * s2);
    for (std::size_t x2 = 0; x2 < s2; ++x2) {
      for (std::size_t x1 = 0; x1 < s1; ++x1) {
        built.f_table[x1 + s1 * x2] = table[x1][x2];
      }
    }
    return built;
  }

  PermBranchingProgram program;
  if (kind == "counter") {
    program = counter_program(prm.at("n").get<uint32_t>(),
                              prm.at("modulus").get<uint32_t>(),
                              prm.at("residues").get<std::vector<uint32_t>>());
  } else if (kind == "majority3") {
    program = majority3_program();
  } else if (kind == "barrington") {
    const BooleanFormula formula = parse_formula(prm.at("formula"));
    program = barrington_compile(formula);
    built.facts["formula_depth"] = formula.depth();
  } else {
    throw precondition_error("unknown protocol kind: " + kind);
  }
  built.facts["group"] = program.group.name();
  built.facts["program_length"] = program.instructions.size();
  built.f_table = table_of_program(program);
  built.protocol = kilian_randomize(program);
  return built;
}

Artifacts cmd_verify_psm(const RunContext& ctx) {
  BuiltProtocol built = build_protocol(ctx.parameters);
  const VerifyMode mode =
      ctx.mode == "mc" ? VerifyMode::kSampled : VerifyMode::kExhaustive;
  const PsmVerifyReport rep =
      psm_verify(built.protocol, built.f_table, mode, ctx.trials, ctx.seed);

  std::size_t correctness_examples = 0;
  std::size_t privacy_examples = 0;
  for (const auto& s : rep.counterexamples) {
    if (s.rfind("decode(", 0) == 0) {
      ++correctness_examples;
    } else {
      ++privacy_examples;
    }
  }

  Artifacts art;
  art.results_csv = csv_row({"check", "passed", "statistic"});
  art.results_csv += csv_row({"correctness", rep.correctness_ok ? "1" : "0",
                              u64_str(correctness_examples)});
  const std::string privacy_stat = rep.mode == "sampled"
                                       ? format_double(rep.min_p_value)
                                       : u64_str(privacy_examples);
  art.results_csv +=
      csv_row({"privacy", rep.privacy_ok ? "1" : "0", privacy_stat});

  art.results = built.facts;
  art.results["mode"] = rep.mode;
  art.results["correctness_ok"] = rep.correctness_ok;
  art.results["privacy_ok"] = rep.privacy_ok;
  art.results["passed"] = rep.passed();
  art.results["counterexamples"] = rep.counterexamples;
  art.results["num_clients"] = built.protocol.num_clients;
  art.results["input_sizes"] = built.protocol.input_sizes;
  art.results["comm_bits"] = built.protocol.comm_bits();
  art.results["key_bits"] = built.protocol.key_bits();
  const uint64_t key_count = built.protocol.key_count();
  if (key_count != UINT64_MAX) art.results["key_count"] = key_count;
  if (rep.mode == "sampled") {
    art.results["trials"] = rep.trials;
    art.results["seed"] = rep.seed;
    art.results["min_p_value"] = rep.min_p_value;
    art.results["significance"] = rep.significance;
    art.results["privacy_tests"] = rep.p_values.size();
  }

  if (!rep.passed()) {
    art.exit_code = 3;
    art.failure = rep.counterexamples.empty()
                      ? std::string("protocol verification failed")
                      : rep.counterexamples.front();
  }
  return art;
}

// ---- hellinger-sup ----------------------------------------------------------

Artifacts cmd_hellinger_sup(const RunContext& ctx) {
  const json& prm = ctx.parameters;
  std::vector<double> thetas;
  if (prm.contains("thetas")) {
    thetas = prm.at("thetas").get<std::vector<double>>();
  } else {
    thetas.push_back(prm.at("theta").get<double>());
  }
  if (thetas.empty()) {
    throw precondition_error("hellinger-sup: empty theta list");
  }
  const auto resolution = prm.value("resolution", std::size_t{400});

  Artifacts art;
  art.results_csv =
      csv_row({"theta", "a", "c", "ratio", "bound", "pass"});
  art.results = json::array();
  std::vector<sdht_lab::PlotSeries> series;

  for (double theta : thetas) {
    const SupRatioResult sup = sup_ratio_binary(theta, resolution);
    const double bound = ratio_limit(theta);
    // Re-runs the grid as a certification; throws audit_error if the grid
    // maximum falls outside [0.95 * bound, bound + 1e-9].
    const double lambda = ratio_floor(theta, resolution);
    const bool pass =
        sup.max_value >= 0.95 * bound && sup.max_value <= bound + 1e-9;
    art.results_csv += csv_row(
        {format_double(theta), format_double(sup.argmax.a),
         format_double(sup.argmax.c), format_double(sup.max_value),
         format_double(bound), pass ? "1" : "0"});
    art.results.push_back({{"theta", theta},
                           {"max_ratio", sup.max_value},
                           {"argmax_a", sup.argmax.a},
                           {"argmax_c", sup.argmax.c},
                           {"bound", bound},
                           {"lambda", lambda},
                           {"certified", pass}});

    sdht_lab::PlotSeries s;
    char label[32];
    std::snprintf(label, sizeof(label), "theta=%.4g", theta);
    s.label = label;
    for (int i = 1; i <= 200; ++i) {
      const double c = 0.005 * i;
      s.points.push_back(
          {c, hellinger_ratio(make_ratio_instance(theta, 0.0, c))});
    }
    series.push_back(std::move(s));
  }

  art.plot_svg = sdht_lab::render_line_plot(
      "Hellinger ratio along the a = 0 edge", "c", "ratio", false, series);
  return art;
}

// ---- tradeoff-audit ---------------------------------------------------------

Artifacts cmd_tradeoff_audit(const RunContext& ctx) {
  const json& prm = ctx.parameters;
  const double theta = prm.value("theta", 0.5);
  const auto count = prm.value("count", uint64_t{200});
  const auto n_max = prm.value("n_max", uint32_t{12});
  if (count == 0 || n_max == 0) {
    throw precondition_error("tradeoff-audit: count and n_max must be >= 1");
  }

  Artifacts art;
  art.results_csv =
      csv_row({"instance", "n", "tv12", "tv01", "lambda", "bound",
               "first_disjunct", "second_disjunct", "pass"});
  uint64_t first_only = 0;
  uint64_t second_only = 0;
  uint64_t both = 0;
  double lambda = 0.0;
  double bound = 0.0;

  for (uint64_t i = 0; i < count; ++i) {
    CounterRng rng(ctx.seed, i);
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(3));
    auto draw_distribution = [&rng, m]() {
      std::vector<double> v(m);
      double sum = 0.0;
      for (auto& x : v) {
        x = -std::log(rng.unit() + 1e-300);
        sum += x;
      }
      for (auto& x : v) x /= sum;
      return FiniteDistribution(v);
    };
    const FiniteDistribution mu0 = draw_distribution();
    const FiniteDistribution mu2 = draw_distribution();
    std::vector<double> mixed(m);
    for (std::size_t y = 0; y < m; ++y) {
      mixed[y] = theta * mu0[y] + (1.0 - theta) * mu2[y];
    }
    const FiniteDistribution mu1{std::move(mixed)};

    std::vector<std::vector<double>> rows;
    rows.reserve(m);
    for (std::size_t x = 0; x < m; ++x) {
      const double u = 0.05 + 0.9 * rng.unit();
      rows.push_back({u, 1.0 - u});
    }
    const Channel w{rows};
    const uint32_t n = 1 + static_cast<uint32_t>(rng.below(n_max));

    const TradeoffRecord rec = tradeoff_audit(
        iid_law(push_forward(w, mu0), n), iid_law(push_forward(w, mu1), n),
        iid_law(push_forward(w, mu2), n), theta);
    lambda = rec.lambda;
    bound = rec.bound;
    if (rec.first_disjunct && rec.second_disjunct) {
      ++both;
    } else if (rec.first_disjunct) {
      ++first_only;
    } else {
      ++second_only;
    }
    art.results_csv += csv_row(
        {u64_str(i), u64_str(n), format_double(rec.tv12),
         format_double(rec.tv01), format_double(rec.lambda),
         format_double(rec.bound), rec.first_disjunct ? "1" : "0",
         rec.second_disjunct ? "1" : "0", "1"});
  }

  art.results["theta"] = theta;
  art.results["count"] = count;
  art.results["lambda"] = lambda;
  art.results["bound"] = bound;
  art.results["first_only"] = first_only;
  art.results["second_only"] = second_only;
  art.results["both"] = both;
  art.results["violations"] = 0;
  return art;
}

// ---- reduce-channel ---------------------------------------------------------

Artifacts cmd_reduce_channel(const RunContext& ctx) {
  const json& prm = ctx.parameters;
  const Channel w = channel_from_param(prm.at("channel"));
  const double theta = prm.value("theta", 0.5);
  const ReductionResult red = reduce_to_binary(w, theta);

  Artifacts art;
  art.results_csv = csv_row({"step", "outputs", "ratio"});
  for (std::size_t i = 0; i < red.trace.size(); ++i) {
    art.results_csv += csv_row({u64_str(i), u64_str(w.output_size() - i),
                                format_double(red.trace[i])});
  }
  art.results["theta"] = theta;
  art.results["input_flipped"] = red.input_flipped;
  art.results["initial_ratio"] = red.trace.front();
  art.results["final_ratio"] = red.trace.back();
  art.results["merges"] = red.trace.size() - 1;
  art.results["reduced_channel"] = red.channel.rows();
  return art;
}

// ---- driver -----------------------------------------------------------------

Artifacts dispatch(const RunContext& ctx) {
  if (ctx.command == "evaluate-scheme") return cmd_evaluate_scheme(ctx);
  if (ctx.command == "sweep-n") return cmd_sweep_n(ctx);
  if (ctx.command == "verify-psm") return cmd_verify_psm(ctx);
  if (ctx.command == "hellinger-sup") return cmd_hellinger_sup(ctx);
  if (ctx.command == "tradeoff-audit") return cmd_tradeoff_audit(ctx);
  if (ctx.command == "reduce-channel") return cmd_reduce_channel(ctx);
  throw precondition_error("unknown command: " + ctx.command);
}

void write_artifacts(const fs::path& out_dir, const RunContext& ctx,
                     const Artifacts& art) {
  fs::create_directories(out_dir);
  write_text_file((out_dir / "results.csv").string(), art.results_csv);
  json summary;
  summary["command"] = ctx.command;
  summary["mode"] = ctx.mode;
  summary["seed"] = ctx.seed;
  summary["parameters"] = ctx.parameters;
  summary["results"] = art.results;
  write_text_file((out_dir / "summary.json").string(), summary.dump(2) + "\n");
  if (!art.plot_svg.empty()) {
    write_text_file((out_dir / "plot.svg").string(), art.plot_svg);
  }
}

int write_error(const fs::path& out_dir, const std::string& command,
                const std::string& type, const std::string& message,
                int code) {
  try {
    fs::create_directories(out_dir);
    json err;
    err["command"] = command;
    err["type"] = type;
    err["error"] = message;
    write_text_file((out_dir / "error.json").string(), err.dump(2) + "\n");
  } catch (const std::exception&) {
    // The exit code still reports the failure even if error.json cannot be
    // written (e.g. unwritable output directory).
  }
  std::fprintf(stderr, "error (%s): %s\n", type.c_str(), message.c_str());
  return code;
}

unsigned threads_from_env() {
  if (const char* env = std::getenv("SDHT_LAB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 256) {
      return static_cast<unsigned>(v);
    }
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sdht_lab: exact and Monte Carlo experiments for keyed "
      "hypothesis-testing schemes"};
  std::string config_path;
  std::string out_flag;
  std::string mode_flag;
  uint64_t seed_flag = 0;
  unsigned threads_flag = 1;
  app.add_option("--config", config_path, "JSON experiment config")
      ->required();
  auto* out_opt = app.add_option(
      "--out", out_flag, "output directory (overrides the config's output)");
  auto* seed_opt = app.add_option("--seed", seed_flag, "RNG seed override");
  auto* threads_opt =
      app.add_option("--threads", threads_flag,
                     "Monte Carlo worker threads (default SDHT_LAB_THREADS)");
  auto* mode_opt =
      app.add_option("--mode", mode_flag, "evaluation mode override")
          ->check(CLI::IsMember({"exact", "mc"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  fs::path out_dir = out_opt->count() ? fs::path(out_flag) : fs::path(".");
  std::string command = "unknown";
  try {
    const json config = json::parse(read_text_file(config_path));
    if (!config.is_object()) {
      throw precondition_error("config root must be a JSON object");
    }
    command = config.value("command", std::string{});
    if (command.empty()) {
      throw precondition_error("config is missing \"command\"");
    }
    if (!out_opt->count() && config.contains("output")) {
      out_dir = fs::path(config.at("output").get<std::string>());
    }

    RunContext ctx;
    ctx.command = command;
    ctx.parameters = config.value("parameters", json::object());
    ctx.seed = seed_opt->count() ? seed_flag
                                 : config.value("seed", uint64_t{0});
    ctx.mode = mode_opt->count()
                   ? mode_flag
                   : ctx.parameters.value("mode", std::string("exact"));
    if (ctx.mode != "exact" && ctx.mode != "mc") {
      throw precondition_error("mode must be \"exact\" or \"mc\", got " +
                               ctx.mode);
    }
    ctx.trials = ctx.parameters.value("trials", uint64_t{100000});
    ctx.threads = threads_opt->count() ? threads_flag : threads_from_env();
    if (ctx.threads == 0) ctx.threads = 1;

    const Artifacts art = dispatch(ctx);
    write_artifacts(out_dir, ctx, art);
    if (art.exit_code != 0) {
      return write_error(out_dir, command, "audit", art.failure,
                         art.exit_code);
    }
    return 0;
  } catch (const audit_error& e) {
    return write_error(out_dir, command, "audit", e.what(), 3);
  } catch (const json::exception& e) {
    return write_error(out_dir, command, "validation", e.what(), 2);
  } catch (const std::exception& e) {
    return write_error(out_dir, command, "validation", e.what(), 2);
  }
}
