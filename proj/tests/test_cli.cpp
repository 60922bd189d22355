#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "natent/simulate.hpp"
#include "natent/zipf.hpp"

using json = nlohmann::ordered_json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr merged
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(NATENT_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    throw std::runtime_error("popen failed for: " + cmd);
  }
  RunResult result;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) {
    result.output.append(buf, n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

json run_json(const std::string& args, int expected_exit = 0) {
  const auto result = run_cli(args + " --format json");
  REQUIRE(result.exit_code == expected_exit);
  return json::parse(result.output);
}

const std::string& temp_dir() {
  static const std::string dir = [] {
    std::string templ =
        (std::filesystem::temp_directory_path() / "natent-cli-XXXXXX")
            .string();
    std::vector<char> buf(templ.begin(), templ.end());
    buf.push_back('\0');
    if (mkdtemp(buf.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed");
    }
    return std::string(buf.data());
  }();
  return dir;
}

std::string temp_path(const std::string& name) {
  return temp_dir() + "/" + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) {
    throw std::runtime_error("failed to write " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in) {
    throw std::runtime_error("failed to read " + path);
  }
  return buf.str();
}

}  // namespace

TEST_CASE("estimate emits the full three-symbol chain as JSON") {
  const json env = run_json(
      "estimate --alphabet-size 3 --confidence 0.75 --mode coarse --mc 2");
  CHECK(env["tool_version"] == "1.0.0");
  CHECK(env["command"] == "estimate");
  CHECK(env["params"]["alphabet_size"] == 3);
  CHECK(env["params"]["confidence"] == 0.75);
  CHECK(env["params"]["mode"] == "coarse");
  CHECK(env["params"]["mc"] == 2);
  CHECK(env["seed"].is_null());

  const json& result = env["result"];
  CHECK(result["alpha"].get<double>() ==
        doctest::Approx(1.2618595071429149).epsilon(1e-14));
  CHECK(result["beta"].get<double>() == 0.75);
  CHECK(result["gamma_prime"].get<double>() ==
        doctest::Approx(1.0403678065999821).epsilon(1e-13));
  CHECK(result["delta0"].get<double>() ==
        doctest::Approx(0.22318473351372766).epsilon(1e-13));
  CHECK(result["epsilon"].get<double>() ==
        result["delta0"].get<double>() / 4);
  CHECK(result["event_count_real"].get<double>() ==
        doctest::Approx(333.9702135015524).epsilon(1e-12));
  CHECK(result["event_count"] == "334");
  CHECK(result["p0"].get<double>() ==
        doctest::Approx(0.2902757583315642).epsilon(1e-13));
  CHECK(result["observation_count_real"].get<double>() ==
        doctest::Approx(1150.6300144378307).epsilon(1e-12));
  CHECK(result["observation_count"] == "1151");
}

TEST_CASE("estimate counts are decimal strings immune to double rounding") {
  const json env =
      run_json("estimate --alphabet-size 26 --confidence 0.95 --mode full");
  const json& result = env["result"];
  CHECK(result["event_count"].is_string());
  CHECK(result["observation_count"].is_string());
  CHECK(result["event_count"] == "124036932");
  CHECK(result["observation_count"] == "9910086988");
  CHECK(result["delta0"].get<double>() ==
        doctest::Approx(0.00048777183415249146).epsilon(1e-12));
  CHECK(result["gamma_prime"].get<double>() ==
        doctest::Approx(0.35060211695147006).epsilon(1e-13));
}

TEST_CASE("estimate rejects bad invocations with exit code 2") {
  CHECK(run_cli("estimate --alphabet-size 1 --confidence 0.9").exit_code == 2);
  const auto small = run_cli("estimate --alphabet-size 1 --confidence 0.9");
  CHECK(small.output.find("alphabet size must be at least 2") !=
        std::string::npos);

  CHECK(run_cli("estimate --alphabet-size 3").exit_code == 2);
  CHECK(run_cli("estimate --alphabet-size 3 --confidence 2.0").exit_code == 2);
  CHECK(run_cli("estimate --alphabet-size 3 --confidence 0.75 --mode coarse")
            .exit_code == 2);
  CHECK(run_cli("estimate --alphabet-size 3 --confidence 0.75 --mc 2")
            .exit_code == 2);
  CHECK(run_cli("estimate --alphabet-size 3 --confidence 0.75 --mode top-q")
            .exit_code == 2);
  CHECK(run_cli("estimate --alphabet-size 3 --confidence 0.75 --mode bogus")
            .exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
}

TEST_CASE("subcommand help exits cleanly") {
  const auto help = run_cli("estimate --help");
  CHECK(help.exit_code == 0);
  CHECK(help.output.find("--alphabet-size") != std::string::npos);
}

TEST_CASE("simulate writes identical CSV for identical seeds") {
  const std::string base_args =
      "simulate --alphabet-size 3 --confidence 0.75 --mode coarse --mc 2 "
      "--grid 10,1000,5,log --ensemble 50 --seed 99";
  const std::string csv_a = temp_path("run_a.csv");
  const std::string csv_b = temp_path("run_b.csv");
  const std::string csv_c = temp_path("run_c.csv");

  const json env_a = run_json(base_args + " --threads 1 --out " + csv_a);
  const json env_b = run_json(base_args + " --threads 1 --out " + csv_b);
  const json env_c = run_json(base_args + " --threads 4 --out " + csv_c);

  const std::string bytes_a = read_file(csv_a);
  CHECK(bytes_a == read_file(csv_b));
  CHECK(bytes_a == read_file(csv_c));
  CHECK(env_a["result"] == env_b["result"]);
  CHECK(env_a["result"] == env_c["result"]);

  CHECK(env_a["result"]["n0_marker"] == "1151");
  CHECK(env_a["seed"] == 99);
  CHECK(env_a["result"]["true_entropy"].get<double>() ==
        doctest::Approx(1.4728301986275223).epsilon(1e-13));
}

TEST_CASE("simulate CSV is LF-terminated with round-trip numbers") {
  const std::string csv = temp_path("schema.csv");
  const json env = run_json(
      "simulate --alphabet-size 3 --confidence 0.75 --mode coarse --mc 2 "
      "--grid 10,1000,5,log --ensemble 20 --seed 3 --out " +
      csv);
  const std::string content = read_file(csv);
  CHECK(content.find('\r') == std::string::npos);
  REQUIRE(!content.empty());
  CHECK(content.back() == '\n');

  std::istringstream lines(content);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "n,mse,mean_estimate");

  int rows = 0;
  std::int64_t prev_n = 0;
  while (std::getline(lines, line)) {
    ++rows;
    const auto comma1 = line.find(',');
    const auto comma2 = line.find(',', comma1 + 1);
    REQUIRE(comma1 != std::string::npos);
    REQUIRE(comma2 != std::string::npos);
    const std::string n_str = line.substr(0, comma1);
    const std::string mse_str = line.substr(comma1 + 1, comma2 - comma1 - 1);
    const std::string mean_str = line.substr(comma2 + 1);

    std::int64_t n = 0;
    const auto [p, ec] =
        std::from_chars(n_str.data(), n_str.data() + n_str.size(), n);
    REQUIRE(ec == std::errc{});
    CHECK(n > prev_n);
    prev_n = n;

    // Round-trip formatting: re-serializing the parsed double must
    // reproduce the file bytes.
    for (const std::string& field : {mse_str, mean_str}) {
      const double value = std::strtod(field.c_str(), nullptr);
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof(buf), value);
      CHECK(std::string(buf, res.ptr) == field);
    }
  }
  CHECK(rows == env["result"]["rows"].get<int>());
  CHECK(rows == 5);
}

TEST_CASE("simulate reports I/O failures with exit code 4") {
  const auto result = run_cli(
      "simulate --alphabet-size 3 --confidence 0.75 --mode coarse --mc 2 "
      "--grid 10,100,3,log --ensemble 5 --out /nonexistent-dir/x.csv");
  CHECK(result.exit_code == 4);
}

TEST_CASE("simulate validates its grid argument") {
  const std::string tail = " --out " + temp_path("bad_grid.csv");
  CHECK(run_cli("simulate --alphabet-size 3 --confidence 0.75 "
                "--grid 10,100,3 --ensemble 5" +
                tail)
            .exit_code == 2);
  CHECK(run_cli("simulate --alphabet-size 3 --confidence 0.75 "
                "--grid 10,100,3,cubic --ensemble 5" +
                tail)
            .exit_code == 2);
  CHECK(run_cli("simulate --alphabet-size 3 --confidence 0.75 "
                "--grid ten,100,3,log --ensemble 5" +
                tail)
            .exit_code == 2);
  CHECK(run_cli("simulate --alphabet-size 3 --confidence 0.75 "
                "--grid 100,10,3,log --ensemble 5" +
                tail)
            .exit_code == 2);
}

TEST_CASE("entropy handles the canonical file cases") {
  const std::string alternating = temp_path("alternating.txt");
  std::string body;
  for (int i = 0; i < 10; ++i) {
    body += "0\n1\n";
  }
  write_file(alternating, body);

  const json env2 = run_json("entropy --ngram 2 --input " + alternating);
  CHECK(env2["result"]["entropy"].get<double>() == 0.0);
  CHECK(env2["result"]["total_symbols"] == "20");
  CHECK(env2["result"]["distinct_symbols"] == 2);
  CHECK(env2["result"]["distinct_ngrams"] == "2");
  CHECK(env2["result"]["alphabet_size"] == 2);

  const std::string pairs = temp_path("pairs.txt");
  write_file(pairs, "0\n0\n1\n1\n");
  const json env1 = run_json("entropy --ngram 1 --input " + pairs);
  CHECK(env1["result"]["entropy"].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(env1["params"]["alphabet_size"].is_null());
}

TEST_CASE("entropy infers and respects alphabet declarations") {
  const std::string sparse = temp_path("sparse.txt");
  write_file(sparse, "0\n4\n0\n4\n");
  const json inferred = run_json("entropy --input " + sparse);
  CHECK(inferred["result"]["alphabet_size"] == 5);
  CHECK(inferred["result"]["distinct_symbols"] == 2);

  const json declared =
      run_json("entropy --alphabet-size 9 --input " + sparse);
  CHECK(declared["result"]["alphabet_size"] == 9);
  CHECK(declared["result"]["entropy"].get<double>() ==
        inferred["result"]["entropy"].get<double>());

  const auto too_small =
      run_cli("entropy --alphabet-size 3 --input " + sparse);
  CHECK(too_small.exit_code == 3);
  CHECK(too_small.output.find("line 2") != std::string::npos);
}

TEST_CASE("entropy reads raw bytes with a 256-symbol alphabet") {
  const std::string bytes = temp_path("bytes.bin");
  write_file(bytes, "aabb");
  const json env =
      run_json("entropy --encoding bytes --ngram 1 --input " + bytes);
  CHECK(env["result"]["entropy"].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(env["result"]["alphabet_size"] == 256);
  CHECK(env["result"]["distinct_symbols"] == 2);
  CHECK(env["result"]["total_symbols"] == "4");
}

TEST_CASE("entropy changes logarithm base on request") {
  const std::string pairs = temp_path("base_pairs.txt");
  write_file(pairs, "0\n1\n0\n1\n");
  const json bits = run_json("entropy --base 2 --input " + pairs);
  const json nats = run_json("entropy --base e --input " + pairs);
  const json hartleys = run_json("entropy --base 10 --input " + pairs);
  const double h2 = bits["result"]["entropy"].get<double>();
  CHECK(nats["result"]["entropy"].get<double>() ==
        doctest::Approx(h2 * std::log(2.0)).epsilon(1e-14));
  CHECK(hartleys["result"]["entropy"].get<double>() ==
        doctest::Approx(h2 * std::log10(2.0)).epsilon(1e-14));
}

TEST_CASE("entropy tolerates blank lines and flags malformed tokens") {
  const std::string blanks = temp_path("blanks.txt");
  write_file(blanks, "0\n\n1\n");
  const json env = run_json("entropy --input " + blanks);
  CHECK(env["result"]["total_symbols"] == "2");

  const std::string malformed = temp_path("malformed.txt");
  write_file(malformed, "0\nbanana\n1\n");
  const auto bad = run_cli("entropy --input " + malformed);
  CHECK(bad.exit_code == 3);
  CHECK(bad.output.find("line 2") != std::string::npos);
  CHECK(bad.output.find("banana") != std::string::npos);

  const std::string negative = temp_path("negative.txt");
  write_file(negative, "0\n-2\n");
  CHECK(run_cli("entropy --input " + negative).exit_code == 3);

  const std::string empty = temp_path("empty.txt");
  write_file(empty, "");
  CHECK(run_cli("entropy --input " + empty).exit_code == 3);

  CHECK(run_cli("entropy --input " + temp_path("missing.txt")).exit_code ==
        4);
}

TEST_CASE("entropy of a large model sample approaches the model entropy") {
  const auto dist = natent::build_distribution(natent::derive_params(3));
  const auto seq = natent::sample_sequence(dist, 100000, 2718);
  std::ostringstream body;
  for (natent::Index i = 0; i < seq.size(); ++i) {
    body << seq.symbols[i] << '\n';
  }
  const std::string path = temp_path("zipf3_draws.txt");
  write_file(path, body.str());

  const json env = run_json("entropy --ngram 1 --input " + path);
  CHECK(env["result"]["total_symbols"] == "100000");
  CHECK(std::abs(env["result"]["entropy"].get<double>() -
                 1.4728301986275223) < 0.01);
}

TEST_CASE("echoed parameters reproduce the result payload") {
  const json first = run_json(
      "estimate --alphabet-size 3 --confidence 0.75 --mode coarse --mc 2");
  const json& p = first["params"];
  std::ostringstream cmd;
  cmd << "estimate --alphabet-size " << p["alphabet_size"].get<std::int64_t>()
      << " --confidence " << p["confidence"].get<double>() << " --mode "
      << p["mode"].get<std::string>() << " --mc "
      << p["mc"].get<std::int64_t>();
  const json second = run_json(cmd.str());
  CHECK(first["result"] == second["result"]);
}

TEST_CASE("echoed simulate parameters reproduce the result payload") {
  const std::string csv_a = temp_path("echo_a.csv");
  const std::string csv_b = temp_path("echo_b.csv");
  const json first = run_json(
      "simulate --alphabet-size 3 --confidence 0.75 --mode coarse --mc 2 "
      "--grid 10,500,4,log --ensemble 25 --seed 5 --out " +
      csv_a);
  const json& p = first["params"];
  std::ostringstream cmd;
  cmd << "simulate --alphabet-size " << p["alphabet_size"].get<std::int64_t>()
      << " --confidence " << p["confidence"].get<double>() << " --mode "
      << p["mode"].get<std::string>() << " --mc "
      << p["mc"].get<std::int64_t>() << " --ngram "
      << p["ngram"].get<int>() << " --base " << p["base"].get<std::string>()
      << " --grid " << p["grid"].get<std::string>() << " --ensemble "
      << p["ensemble"].get<int>() << " --threads 2 --seed "
      << first["seed"].get<std::uint64_t>() << " --out " << csv_b;
  const json second = run_json(cmd.str());
  CHECK(first["result"] == second["result"]);
  CHECK(read_file(csv_a) == read_file(csv_b));
}

TEST_CASE("text and JSON formats agree on every numeric field") {
  const std::string args =
      "estimate --alphabet-size 26 --confidence 0.95 --mode full";
  const json env = run_json(args);
  const auto text = run_cli(args + " --format text");
  REQUIRE(text.exit_code == 0);

  const auto text_value = [&](const std::string& key) -> std::string {
    const std::string needle = key + " = ";
    const auto pos = text.output.find(needle);
    REQUIRE(pos != std::string::npos);
    const auto eol = text.output.find('\n', pos);
    return text.output.substr(pos + needle.size(),
                              eol - pos - needle.size());
  };

  for (const auto& [key, value] : env["result"].items()) {
    CAPTURE(key);
    const std::string printed = text_value("result." + key);
    if (value.is_number_float()) {
      CHECK(std::strtod(printed.c_str(), nullptr) == value.get<double>());
    } else if (value.is_string()) {
      CHECK(printed == value.get<std::string>());
    }
  }
  CHECK(text_value("command") == "estimate");
  CHECK(text_value("result.observation_count") == "9910086988");
}
