// natent: sample-size and entropy calculator for Zipf-ranked symbol streams.
//
// Subcommands:
//   estimate  derive the rank model for an alphabet and the minimum number
//             of observations that resolves its entropy at a confidence level
//   simulate  Monte Carlo MSE of plug-in entropy estimation vs sample count,
//             written as CSV
//   entropy   plug-in N-gram entropy of a symbol file
//
// All commands support --format json|text. JSON output is an envelope
// {tool_version, command, params, result, seed}; re-running with the echoed
// params reproduces the result payload exactly. Integer counts that may
// exceed 2^53 are emitted as decimal strings so JSON consumers cannot lose
// precision silently.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "natent/natent.hpp"

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "1.0.0";

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal form that round-trips to the same double.
std::string fmt_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string fmt_count(std::int64_t value) { return std::to_string(value); }

std::string scalar_text(const json& value) {
  if (value.is_null()) {
    return "null";
  }
  if (value.is_string()) {
    return value.get<std::string>();
  }
  if (value.is_boolean()) {
    return value.get<bool>() ? "true" : "false";
  }
  if (value.is_number_float()) {
    return fmt_double(value.get<double>());
  }
  if (value.is_number_unsigned()) {
    return std::to_string(value.get<std::uint64_t>());
  }
  return std::to_string(value.get<std::int64_t>());
}

json make_envelope(const std::string& command, json params, json result,
                   json seed) {
  json env;
  env["tool_version"] = kToolVersion;
  env["command"] = command;
  env["params"] = std::move(params);
  env["result"] = std::move(result);
  env["seed"] = std::move(seed);
  return env;
}

void emit(const json& env, const std::string& format) {
  if (format == "json") {
    std::cout << env.dump(2) << '\n';
    return;
  }
  std::ostringstream out;
  out << "tool_version = " << env["tool_version"].get<std::string>() << '\n';
  out << "command = " << env["command"].get<std::string>() << '\n';
  for (const auto& [key, value] : env["params"].items()) {
    out << "params." << key << " = " << scalar_text(value) << '\n';
  }
  for (const auto& [key, value] : env["result"].items()) {
    out << "result." << key << " = " << scalar_text(value) << '\n';
  }
  out << "seed = " << scalar_text(env["seed"]) << '\n';
  std::cout << out.str();
}

// Estimation flags shared by the estimate and simulate subcommands.
struct EstimateFlags {
  std::int64_t alphabet_size = 0;
  double confidence = 0.0;
  std::string mode = "full";
  std::int64_t mc = 0;
  double q = 0.0;
  CLI::Option* mc_opt = nullptr;
  CLI::Option* q_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alphabet-size", alphabet_size, "Alphabet size M")
        ->required();
    cmd->add_option("--confidence", confidence, "Confidence level in (0, 1)")
        ->required();
    cmd->add_option("--mode", mode,
                    "Which probability gap to resolve: full, coarse or top-q")
        ->check(CLI::IsMember({"full", "coarse", "top-q"}));
    mc_opt = cmd->add_option(
        "--mc", mc, "Effective alphabet size (requires --mode coarse)");
    q_opt = cmd->add_option(
        "--q", q, "Top fraction of ranks (requires --mode top-q)");
  }

  natent::EstimationMode resolve() const {
    const bool mc_set = mc_opt->count() > 0;
    const bool q_set = q_opt->count() > 0;
    if (mode == "coarse") {
      if (!mc_set) {
        throw std::domain_error("--mode coarse requires --mc");
      }
      if (q_set) {
        throw std::domain_error("--q only applies to --mode top-q");
      }
      return natent::EstimationMode::coarse(mc);
    }
    if (mode == "top-q") {
      if (!q_set) {
        throw std::domain_error("--mode top-q requires --q");
      }
      if (mc_set) {
        throw std::domain_error("--mc only applies to --mode coarse");
      }
      return natent::EstimationMode::top_quantile(q);
    }
    if (mc_set) {
      throw std::domain_error("--mc only applies to --mode coarse");
    }
    if (q_set) {
      throw std::domain_error("--q only applies to --mode top-q");
    }
    return natent::EstimationMode::full();
  }

  json params() const {
    json p;
    p["alphabet_size"] = alphabet_size;
    p["confidence"] = confidence;
    p["mode"] = mode;
    if (mode == "coarse") {
      p["mc"] = mc;
    }
    if (mode == "top-q") {
      p["q"] = q;
    }
    return p;
  }
};

natent::LogBase parse_base(const std::string& name) {
  if (name == "2") {
    return natent::LogBase::two;
  }
  if (name == "e") {
    return natent::LogBase::e;
  }
  return natent::LogBase::ten;
}

std::vector<std::int64_t> parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream stream(text);
  while (std::getline(stream, part, ',')) {
    parts.push_back(part);
  }
  if (parts.size() != 4) {
    throw std::domain_error("--grid expects min,max,points,log|lin, got '" +
                            text + "'");
  }
  const auto parse_int = [&](const std::string& field,
                             const char* what) -> std::int64_t {
    std::int64_t value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
      throw std::domain_error(std::string("--grid ") + what +
                              " is not an integer: '" + field + "'");
    }
    return value;
  };
  const std::int64_t lo = parse_int(parts[0], "min");
  const std::int64_t hi = parse_int(parts[1], "max");
  const std::int64_t points = parse_int(parts[2], "points");
  if (points < 1 || points > 100000) {
    throw std::domain_error("--grid points must lie in [1, 100000]");
  }
  if (parts[3] == "log") {
    return natent::log_spaced_grid(lo, hi, static_cast<int>(points));
  }
  if (parts[3] == "lin") {
    return natent::linear_spaced_grid(lo, hi, static_cast<int>(points));
  }
  throw std::domain_error("--grid scale must be log or lin, got '" + parts[3] +
                          "'");
}

void run_estimate(const EstimateFlags& flags, const std::string& format) {
  const auto est =
      natent::estimate_samples(flags.alphabet_size, flags.confidence,
                               flags.resolve());
  json result;
  result["alpha"] = est.params.alpha;
  result["beta"] = est.params.beta;
  result["gamma"] = est.params.gamma;
  result["kappa"] = est.params.kappa;
  result["gamma_prime"] = est.params.gamma_prime;
  result["delta0"] = est.delta0;
  result["epsilon"] = est.epsilon;
  result["event_count_real"] = est.event_count_real;
  result["event_count"] = fmt_count(est.event_count);
  result["p0"] = est.p0;
  result["observation_count_real"] = est.observation_count_real;
  result["observation_count"] = fmt_count(est.observation_count);
  emit(make_envelope("estimate", flags.params(), std::move(result), nullptr),
       format);
}

void write_csv(const natent::MseCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw io_error("cannot open '" + path + "' for writing");
  }
  out << "n,mse,mean_estimate\n";
  for (const auto& point : curve.points) {
    out << fmt_count(point.samples) << ',' << fmt_double(point.mse) << ','
        << fmt_double(point.mean_estimate) << '\n';
  }
  out.flush();
  if (!out) {
    throw io_error("failed while writing '" + path + "'");
  }
}

void run_simulate(const EstimateFlags& flags, int ngram,
                  const std::string& base_name, std::string grid_arg,
                  int ensemble, std::uint64_t seed, int threads,
                  const std::string& out_path, const std::string& format) {
  const auto mode = flags.resolve();
  if (grid_arg.empty()) {
    // Default: 30 log-spaced points from 10 up to ten times the estimated
    // observation count, so the curve brackets the N0 marker.
    const auto est = natent::estimate_samples(flags.alphabet_size,
                                              flags.confidence, mode);
    constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
    const std::int64_t hi = est.observation_count > kMax / 10
                                ? kMax
                                : std::max<std::int64_t>(
                                      10 * est.observation_count, 10);
    grid_arg = "10," + std::to_string(hi) + ",30,log";
  }

  natent::SimConfig config;
  config.alphabet_size = flags.alphabet_size;
  config.confidence = flags.confidence;
  config.mode = mode;
  config.ngram_order = ngram;
  config.base = parse_base(base_name);
  config.sample_grid = parse_grid(grid_arg);
  config.ensemble = ensemble;
  config.seed = seed;
  config.threads = threads;

  const auto curve = natent::mse_curve(config);
  write_csv(curve, out_path);

  json params = flags.params();
  params["ngram"] = ngram;
  params["base"] = base_name;
  params["grid"] = grid_arg;
  params["ensemble"] = ensemble;
  params["threads"] = threads;
  params["out"] = out_path;
  json result;
  result["true_entropy"] = curve.true_entropy;
  result["n0_marker"] = fmt_count(curve.n0_marker);
  result["rows"] = curve.points.size();
  emit(make_envelope("simulate", std::move(params), std::move(result), seed),
       format);
}

std::vector<int> read_symbol_lines(const std::string& path,
                                   std::int64_t declared, bool has_declared) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open '" + path + "' for reading");
  }
  std::vector<int> symbols;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
      continue;  // blank line (e.g. trailing newline)
    }
    const auto end = line.find_last_not_of(" \t\r");
    const std::string_view token(line.data() + begin, end - begin + 1);
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw natent::data_error("line " + std::to_string(lineno) +
                               ": malformed symbol token '" +
                               std::string(token) + "'");
    }
    if (value < 0) {
      throw natent::data_error("line " + std::to_string(lineno) +
                               ": symbol must be nonnegative, got " +
                               std::to_string(value));
    }
    if (has_declared && value >= declared) {
      throw natent::data_error(
          "line " + std::to_string(lineno) + ": symbol " +
          std::to_string(value) + " outside declared alphabet of size " +
          std::to_string(declared));
    }
    symbols.push_back(value);
  }
  if (in.bad()) {
    throw io_error("failed while reading '" + path + "'");
  }
  return symbols;
}

std::vector<int> read_symbol_bytes(const std::string& path,
                                   std::int64_t declared, bool has_declared) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io_error("cannot open '" + path + "' for reading");
  }
  const std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw io_error("failed while reading '" + path + "'");
  }
  std::vector<int> symbols;
  symbols.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const int value = static_cast<unsigned char>(raw[i]);
    if (has_declared && value >= declared) {
      throw natent::data_error(
          "byte offset " + std::to_string(i) + ": symbol " +
          std::to_string(value) + " outside declared alphabet of size " +
          std::to_string(declared));
    }
    symbols.push_back(value);
  }
  return symbols;
}

void run_entropy(const std::string& input, const std::string& encoding,
                 int ngram, const std::string& base_name,
                 std::int64_t declared, bool has_declared,
                 const std::string& format) {
  std::vector<int> symbols =
      encoding == "bytes" ? read_symbol_bytes(input, declared, has_declared)
                          : read_symbol_lines(input, declared, has_declared);
  if (symbols.empty()) {
    throw natent::data_error("input '" + input + "' contains no symbols");
  }

  natent::SymbolSequence seq;
  seq.symbols = Eigen::Map<Eigen::ArrayXi>(
      symbols.data(), static_cast<natent::Index>(symbols.size()));
  if (has_declared) {
    seq.alphabet_size = declared;
  } else if (encoding == "bytes") {
    seq.alphabet_size = 256;
  } else {
    seq.alphabet_size = seq.symbols.maxCoeff() + 1;
  }

  const auto table = natent::build_ngram_table(seq, ngram);
  const double entropy = natent::ngram_entropy(table, parse_base(base_name));
  const auto emp = natent::empirical_distribution(seq);
  const auto distinct_symbols = (emp.counts > 0).count();

  json params;
  params["input"] = input;
  params["encoding"] = encoding;
  params["ngram"] = ngram;
  params["base"] = base_name;
  params["alphabet_size"] =
      has_declared ? json(declared) : json(nullptr);
  json result;
  result["entropy"] = entropy;
  result["alphabet_size"] = seq.alphabet_size;
  result["total_symbols"] = fmt_count(seq.size());
  result["distinct_symbols"] = distinct_symbols;
  result["distinct_ngrams"] = fmt_count(
      static_cast<std::int64_t>(table.joint_counts.size()));
  emit(make_envelope("entropy", std::move(params), std::move(result), nullptr),
       format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-sample estimation and entropy measurement for "
               "Zipf-ranked symbol streams"};
  app.require_subcommand(1);

  EstimateFlags est_flags;
  std::string est_format = "text";
  auto* estimate =
      app.add_subcommand("estimate",
                         "Observations needed to resolve the rank model's "
                         "entropy at a confidence level");
  est_flags.attach(estimate);
  estimate->add_option("--format", est_format, "Output format")
      ->check(CLI::IsMember({"json", "text"}));
  estimate->callback([&] { run_estimate(est_flags, est_format); });

  EstimateFlags sim_flags;
  int sim_ngram = 1;
  std::string sim_base = "2";
  std::string sim_grid;
  int sim_ensemble = 200;
  std::uint64_t sim_seed = 0;
  int sim_threads = 1;
  std::string sim_out;
  std::string sim_format = "text";
  auto* simulate =
      app.add_subcommand("simulate",
                         "Monte Carlo MSE of plug-in entropy estimation "
                         "versus sample count (CSV)");
  sim_flags.attach(simulate);
  simulate->add_option("--ngram", sim_ngram, "N-gram order of the estimator")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--base", sim_base, "Entropy logarithm base")
      ->check(CLI::IsMember({"2", "e", "10"}));
  simulate->add_option("--grid", sim_grid,
                       "Sample grid as min,max,points,log|lin (default: 30 "
                       "log points from 10 to 10*N0)");
  simulate->add_option("--ensemble", sim_ensemble,
                       "Independent trials per grid point")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "Master RNG seed");
  simulate->add_option("--threads", sim_threads,
                       "Worker threads (any value gives identical output)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim_out, "CSV output path")->required();
  simulate->add_option("--format", sim_format, "Output format")
      ->check(CLI::IsMember({"json", "text"}));
  simulate->callback([&] {
    run_simulate(sim_flags, sim_ngram, sim_base, sim_grid, sim_ensemble,
                 sim_seed, sim_threads, sim_out, sim_format);
  });

  std::string ent_input;
  std::string ent_encoding = "lines";
  int ent_ngram = 1;
  std::string ent_base = "2";
  std::int64_t ent_alphabet = 0;
  std::string ent_format = "text";
  auto* entropy =
      app.add_subcommand("entropy",
                         "Plug-in N-gram entropy of a symbol file");
  entropy->add_option("--input", ent_input, "Symbol file path")->required();
  entropy->add_option("--encoding", ent_encoding,
                      "lines: one integer token per line; bytes: raw bytes "
                      "(alphabet 256)")
      ->check(CLI::IsMember({"lines", "bytes"}));
  entropy->add_option("--ngram", ent_ngram, "N-gram order")
      ->check(CLI::PositiveNumber);
  entropy->add_option("--base", ent_base, "Entropy logarithm base")
      ->check(CLI::IsMember({"2", "e", "10"}));
  auto* ent_alpha_opt = entropy->add_option(
      "--alphabet-size", ent_alphabet,
      "Declared alphabet size (default: max symbol + 1)");
  entropy->add_option("--format", ent_format, "Output format")
      ->check(CLI::IsMember({"json", "text"}));
  entropy->callback([&] {
    run_entropy(ent_input, ent_encoding, ent_ngram, ent_base, ent_alphabet,
                ent_alpha_opt->count() > 0, ent_format);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const natent::data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::overflow_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
