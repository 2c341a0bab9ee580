// qlease: command-line front end for the leasing simulator.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qlease/adversary_harness.hpp"
#include "qlease/dequantumizer.hpp"
#include "qlease/rng.hpp"
#include "qlease/ssl_scheme.hpp"
#include "qlease/subspace_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qlease;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr const char* kReportSchema = "qlease.report/1";
constexpr const char* kLeaseSchema = "qlease.lease/1";
constexpr const char* kKeySchema = "qlease.sk/1";

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Substream ids under the configured seed.
constexpr std::uint64_t kGenStream = 1;
constexpr std::uint64_t kLessorStream = 2;
constexpr std::uint64_t kCircuitStream = 3;
constexpr std::uint64_t kAttackStream = 4;
constexpr std::uint64_t kRunStreamBase = 1ULL << 32;
constexpr std::uint64_t kCheckStreamBase = 2ULL << 32;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  unsigned q = 2;
  unsigned lambda = 6;
  std::size_t n = 6;
  std::string mode = "ideal";
  std::uint64_t seed = 1;
  std::uint64_t trials = 1000;
  std::vector<std::string> strategies{"measure_reprepare_duplicate"};
  std::string experiment = "finite";
  std::string sampler = "point";
  std::uint64_t budget = 1024;
  double beta = 0.5;
  double eps = 0.0;
  std::string attack = "pirate";
  unsigned threads = 0;
  std::string circuit;
  std::string lease;
  std::string sk;
  std::string input;
  std::string out;
  std::string format = "json";
  bool timestamp = false;

  json to_json() const {
    return {{"q", q},
            {"lambda", lambda},
            {"n", n},
            {"mode", mode},
            {"seed", seed},
            {"trials", trials},
            {"strategy", strategies},
            {"experiment", experiment},
            {"sampler", sampler},
            {"budget", budget},
            {"beta", beta},
            {"eps", eps},
            {"attack", attack},
            {"rng", "philox4x32-10"}};
  }
};

template <class T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void apply_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  try {
    take(j, "q", c.q);
    take(j, "lambda", c.lambda);
    take(j, "n", c.n);
    take(j, "mode", c.mode);
    take(j, "seed", c.seed);
    take(j, "trials", c.trials);
    if (j.contains("strategy")) {
      c.strategies = j.at("strategy").is_array() ? j.at("strategy").get<std::vector<std::string>>()
                                                 : std::vector<std::string>{j.at("strategy").get<std::string>()};
    }
    take(j, "experiment", c.experiment);
    take(j, "sampler", c.sampler);
    take(j, "budget", c.budget);
    take(j, "beta", c.beta);
    take(j, "eps", c.eps);
    take(j, "attack", c.attack);
    take(j, "threads", c.threads);
    take(j, "circuit", c.circuit);
    take(j, "lease", c.lease);
    take(j, "sk", c.sk);
    take(j, "out", c.out);
    take(j, "format", c.format);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

// Flags bound to scratch values; only the ones actually given override the config.
struct Flags {
  std::string config;
  RunConfig v;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> bound;

  template <class T>
  void add(CLI::App* app, const std::string& name, T RunConfig::*field, const std::string& help) {
    auto* opt = app->add_option(name, v.*field, help);
    bound.emplace_back(opt, [this, field](RunConfig& c) { c.*field = v.*field; });
  }

  RunConfig resolve() const {
    RunConfig c;
    bool seed_set = false;
    if (!config.empty()) {
      apply_config_file(config, c);
      std::ifstream in(config);
      seed_set = json::parse(in).contains("seed");
    }
    for (const auto& [opt, apply] : bound) {
      if (opt->count() > 0) {
        apply(c);
        if (opt->get_name() == "--seed") seed_set = true;
      }
    }
    if (!seed_set) {
      if (const char* env = std::getenv("QLEASE_SEED")) {
        try {
          c.seed = std::stoull(env);
        } catch (const std::exception&) {
          throw UsageError("QLEASE_SEED must be an unsigned integer");
        }
      }
    }
    c.timestamp = v.timestamp;
    if (c.format != "json" && c.format != "csv") throw UsageError("--format must be json or csv");
    return c;
  }
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override it");
  f.add(app, "--q", &RunConfig::q, "field modulus");
  f.add(app, "--lambda", &RunConfig::lambda, "register length");
  f.add(app, "--n", &RunConfig::n, "circuit input bits");
  f.add(app, "--mode", &RunConfig::mode, "oracle mode: ideal or toy");
  f.add(app, "--seed", &RunConfig::seed, "64-bit seed (fallback: QLEASE_SEED)");
  f.add(app, "--trials", &RunConfig::trials, "number of trials");
  f.add(app, "--out", &RunConfig::out, "output path");
  f.add(app, "--format", &RunConfig::format, "json or csv");
}

oracles::OracleMode mode_of(const RunConfig& c) {
  try {
    return oracles::oracle_mode_from_string(c.mode);
  } catch (const std::exception&) {
    throw UsageError("--mode must be ideal or toy");
  }
}

field::FieldParams params_of(const RunConfig& c) {
  if (!field::is_supported_prime(c.q)) throw UsageError("--q must be a supported prime");
  if (c.lambda == 0) throw UsageError("--lambda must be positive");
  return {c.q, c.lambda};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path + ": malformed JSON: " + e.what());
  }
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream s;
  s << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json envelope(const std::string& command, const RunConfig& c, json payload) {
  json e{{"schema", kReportSchema},
         {"tool", "qlease"},
         {"version", kToolVersion},
         {"command", command},
         {"seed", c.seed},
         {"config", c.to_json()},
         {"payload", std::move(payload)}};
  if (c.timestamp) e["timestamp"] = iso_timestamp();
  return e;
}

void emit(const RunConfig& c, const json& env, const std::string& csv) {
  if (c.out.empty()) {
    std::cout << (c.format == "csv" ? csv : env.dump(2) + "\n");
    return;
  }
  write_text(c.out, env.dump(2) + "\n");
  if (c.format == "csv") write_text(fs::path(c.out).replace_extension(".csv").string(), csv);
}

BitString parse_input(const std::string& text, std::size_t n) {
  if (text.empty()) throw UsageError("--x is required");
  if (text.find_first_not_of("01") == std::string::npos && text.size() == n) return BitString::from_bits(text);
  try {
    return BitString::from_hex(text, n);
  } catch (const std::exception&) {
    throw UsageError("--x must be " + std::to_string(n) + " bits or their hex encoding");
  }
}

// ---------------------------------------------------------------- selftest

struct SuiteResult {
  std::string name;
  double max_error = 0.0;
  std::vector<std::string> failures;
};

double vec_error(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return (a - b).norm(); }

SuiteResult fourier_dual_suite(field::FieldParams p, double tol, Rng& rng) {
  SuiteResult r{"fourier-dual"};
  for (int i = 0; i < 10; ++i) {
    const auto a = field::random_subspace(p, rng.uniform_below(p.lambda + 1), rng);
    const double e = vec_error(quantum::qft(quantum::subspace_state(a), false).amplitudes(),
                               quantum::subspace_state(a.dual()).amplitudes());
    r.max_error = std::max(r.max_error, e);
    if (e > tol) r.failures.push_back("FT|A> != |A^perp> (dim " + std::to_string(a.dim()) + ")");
  }
  return r;
}

SuiteResult projector_identity_suite(field::FieldParams p, double tol, Rng& rng) {
  SuiteResult r{"projector-identity"};
  for (int i = 0; i < 10; ++i) {
    const auto a = field::random_subspace(p, rng.uniform_below(p.lambda + 1), rng);
    const auto dual = a.dual();
    const auto psi = quantum::PureState::random(p, rng);
    const auto target = quantum::subspace_state(a);
    const Eigen::VectorXcd expected = target.inner(psi) * target.amplitudes();

    const auto in_a = quantum::BinaryMeasurement::membership([&](const field::FieldVector& v) { return a.contains(v); });
    const auto in_dual =
        quantum::BinaryMeasurement::membership([&](const field::FieldVector& v) { return dual.contains(v); });
    Eigen::VectorXcd composed = Eigen::VectorXcd::Zero(psi.amplitudes().size());
    const Eigen::VectorXcd w1 = in_a.project_accept(psi);
    if (w1.norm() > 1e-12) {
      const auto f = quantum::qft(quantum::PureState(p, w1 / w1.norm()), false);
      const Eigen::VectorXcd w2 = in_dual.project_accept(f);
      if (w2.norm() > 1e-12) {
        composed = w1.norm() * w2.norm() * quantum::qft(quantum::PureState(p, w2 / w2.norm()), true).amplitudes();
      }
    }
    const double e = vec_error(composed, expected);
    r.max_error = std::max(r.max_error, e);
    if (e > tol) r.failures.push_back("FT^-1 Pi_perp FT Pi_A psi != <A|psi>|A> (dim " + std::to_string(a.dim()) + ")");
  }
  return r;
}

SuiteResult gentle_measurement_suite(field::FieldParams p, double tol, Rng& rng) {
  SuiteResult r{"gentle-measurement"};
  for (int i = 0; i < 10; ++i) {
    const auto a = field::random_subspace(p, p.lambda / 2, rng);
    const auto target = quantum::subspace_state(a);
    const auto noise = quantum::PureState::random(p, rng);
    const double t = 0.05 * (i + 1);
    const Eigen::VectorXcd v = target.amplitudes() + t * noise.amplitudes();
    const quantum::PureState s(p, v / v.norm());
    try {
      const auto g =
          quantum::gentle_measurement_bound_check(s, quantum::BinaryMeasurement::subspace_state_projector(a), tol);
      r.max_error = std::max(r.max_error, g.trace_distance - g.bound);
    } catch (const quantum::GentleBoundViolated& e) {
      r.failures.push_back(e.what());
    }
  }
  return r;
}

SuiteResult dual_dimension_suite(field::FieldParams p, Rng& rng) {
  SuiteResult r{"dual-dimension"};
  for (int i = 0; i < 10; ++i) {
    const auto a = field::random_subspace(p, rng.uniform_below(p.lambda + 1), rng);
    const auto dual = a.dual();
    if (a.dim() + dual.dim() != p.lambda) r.failures.push_back("dim A + dim A^perp != lambda");
    if (!(dual.dual() == a)) r.failures.push_back("(A^perp)^perp != A");
  }
  return r;
}

int cmd_selftest(const RunConfig& c, bool q_given, bool lambda_given, bool force_fail) {
  const double tol = force_fail ? 1e-15 : quantum::kTolerance;
  std::vector<field::FieldParams> grid;
  if (q_given || lambda_given) {
    grid.push_back(params_of(c));
  } else {
    grid = {{2, 4}, {2, 6}, {3, 4}, {5, 3}};
  }
  Rng rng(c.seed, 0x73656c66);
  int failed = 0;
  for (const auto& p : grid) {
    quantum::checked_dimension(p.q, p.lambda, quantum::kSingleRegisterCap);
    for (const auto& s : {fourier_dual_suite(p, tol, rng), projector_identity_suite(p, tol, rng),
                          gentle_measurement_suite(p, tol, rng), dual_dimension_suite(p, rng)}) {
      const bool ok = s.failures.empty();
      failed += !ok;
      std::cout << (ok ? "PASS " : "FAIL ") << s.name << " q=" << p.q << " lambda=" << p.lambda
                << " max_error=" << std::scientific << std::setprecision(2) << s.max_error << std::defaultfloat
                << "\n";
      for (const auto& f : s.failures) std::cout << "  - " << f << "\n";
    }
  }
  std::cout << (failed ? "selftest: " + std::to_string(failed) + " suite(s) failed" : std::string("selftest: ok"))
            << " (tolerance " << tol << ")\n";
  return failed ? kFailure : kOk;
}

// ---------------------------------------------------------------- lease files

struct LeaseFile {
  json meta;
  ssl::CrsPtr crs;
  std::optional<ssl::LeasedState> lease;
  fs::path json_path;
  fs::path state_path;
};

ssl::CrsPtr crs_from(const json& j) {
  const field::FieldParams p{j.at("q").get<unsigned>(), j.at("lambda").get<unsigned>()};
  return ssl::Crs::setup(p, oracles::oracle_mode_from_string(j.at("mode").get<std::string>()),
                         j.at("seed").get<std::uint64_t>());
}

LeaseFile load_lease(const std::string& path) {
  if (path.empty()) throw UsageError("--lease is required");
  LeaseFile f;
  f.json_path = path;
  f.meta = read_json(path);
  try {
    if (f.meta.at("schema") != kLeaseSchema) throw UsageError(path + ": not a lease file");
    f.crs = crs_from(f.meta.at("crs"));
    if (f.crs->to_json() != f.meta.at("crs")) throw UsageError(path + ": crs does not match its parameters");
    f.state_path = f.json_path.parent_path() / f.meta.at("state_file").get<std::string>();
    auto classical = ssl::ClassicalPart::from_json(f.meta.at("classical"), *f.crs);
    auto state = quantum::read_state_dump_file(f.state_path.string());
    if (state.params() != f.crs->params()) throw UsageError(f.state_path.string() + ": state parameters differ");
    f.lease = ssl::LeasedState{std::move(state), std::move(classical)};
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(path + ": malformed lease: " + e.what());
  }
  return f;
}

void save_lease(LeaseFile& f) {
  quantum::write_state_dump_file(f.state_path.string(), std::get<quantum::PureState>(f.lease->quantum));
  write_text(f.json_path.string(), f.meta.dump(2) + "\n");
}

int cmd_circuit(const RunConfig& c) {
  Rng rng(c.seed, kCircuitStream);
  circuits::ProgramPtr program;
  try {
    program = harness::named_sampler(c.sampler, c.n)(rng);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto text = program->to_json().dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    write_text(c.out, text);
  }
  std::cerr << "accepting input: " << program->search().to_bits() << "\n";
  return kOk;
}

int cmd_lease(const RunConfig& c) {
  if (c.circuit.empty()) throw UsageError("--circuit is required");
  const auto crs = ssl::Crs::setup(params_of(c), mode_of(c), c.seed);
  circuits::ProgramPtr program;
  try {
    program = crs->codec().parse(read_json(c.circuit));
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(c.circuit + ": malformed circuit: " + e.what());
  }
  Rng gen_rng(c.seed, kGenStream);
  Rng lessor_rng(c.seed, kLessorStream);
  const auto sk = ssl::gen(*crs, gen_rng);
  std::optional<ssl::LeasedState> lease;
  try {
    lease = ssl::lessor(*crs, sk, program, lessor_rng);
  } catch (const circuits::Unsatisfiable& e) {
    std::cerr << "lease: circuit has no accepting input: " << e.what() << "\n";
    return kFailure;
  }

  const fs::path prefix = c.out.empty() ? fs::path("lease") : fs::path(c.out);
  LeaseFile f;
  f.json_path = prefix.string() + ".lease.json";
  f.state_path = prefix.string() + ".qlsv";
  f.crs = crs;
  f.lease = lease;
  f.meta = {{"schema", kLeaseSchema},
            {"version", kToolVersion},
            {"simulated", true},
            {"mode", c.mode},
            {"seed", c.seed},
            {"crs", crs->to_json()},
            {"input_bits", program->input_bits()},
            {"output_bits", program->output_bits()},
            {"state_file", f.state_path.filename().string()},
            {"runs", 0},
            {"checks", 0},
            {"classical", lease->classical.to_json()}};
  save_lease(f);
  write_text(prefix.string() + ".sk.json", json{{"schema", kKeySchema},
                                                {"seed", c.seed},
                                                {"crs", crs->to_json()},
                                                {"A", sk.a.to_json()}}
                                               .dump(2) +
                                               "\n");
  std::cout << f.json_path.string() << "\n";
  return kOk;
}

int cmd_run(const RunConfig& c) {
  auto f = load_lease(c.lease);
  const auto x = parse_input(c.input, f.lease->classical.c_obf.input_bits());
  const auto runs = f.meta.value("runs", std::uint64_t{0});
  Rng rng(f.meta.at("seed").get<std::uint64_t>(), kRunStreamBase + runs);
  const auto r = ssl::run(*f.crs, *f.lease, x, rng);
  std::cout << (r.output ? r.output->to_bits() : std::string("⊥")) << "\n";
  f.lease = r.post_lease;
  f.meta["runs"] = runs + 1;
  save_lease(f);
  return kOk;
}

int cmd_check(const RunConfig& c) {
  auto f = load_lease(c.lease);
  if (c.sk.empty()) throw UsageError("--sk is required");
  const auto kj = read_json(c.sk);
  std::optional<ssl::SecretKey> sk;
  try {
    if (kj.at("schema") != kKeySchema) throw UsageError(c.sk + ": not a key file");
    sk = ssl::SecretKey{field::Subspace::from_json(kj.at("A")).subspace};
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(c.sk + ": malformed key: " + e.what());
  }
  if (sk->a.params() != f.crs->params()) throw UsageError("key and lease parameters differ");
  const auto checks = f.meta.value("checks", std::uint64_t{0});
  Rng rng(f.meta.at("seed").get<std::uint64_t>(), kCheckStreamBase + checks);
  const bool ok = ssl::check(*sk, *f.lease, rng);
  std::cout << (ok ? 1 : 0) << "\n";
  f.meta["checks"] = checks + 1;
  save_lease(f);
  return kOk;
}

// ---------------------------------------------------------------- experiment

int cmd_experiment(const RunConfig& c) {
  harness::ExperimentConfig ec;
  ec.params = params_of(c);
  ec.mode = mode_of(c);
  ec.seed = c.seed;
  ec.n = c.n;
  ec.trials = c.trials;
  ec.beta = c.beta;
  ec.sampler_name = c.sampler;
  ec.threads = c.threads;
  if (c.experiment != "finite" && c.experiment != "infinite") throw UsageError("--experiment must be finite or infinite");
  quantum::checked_dimension(ec.params.q, 2 * ec.params.lambda, quantum::kBipartiteCap);

  harness::ProgramSampler sampler;
  try {
    sampler = harness::named_sampler(c.sampler, c.n);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  json reports = json::array();
  std::string csv = harness::ExperimentReport::csv_header() + "\n";
  for (const auto& name : c.strategies) {
    harness::StrategyKind kind;
    try {
      kind = harness::strategy_kind_from_string(name);
    } catch (const std::exception&) {
      throw UsageError("unknown strategy " + name);
    }
    if (kind == harness::StrategyKind::custom) throw UsageError("custom strategies are library-only");
    const auto strategy = harness::make_strategy(kind, c.budget);
    const auto report = c.experiment == "finite" ? harness::finite_term_experiment(strategy, ec, sampler)
                                                 : harness::infinite_term_experiment(strategy, ec, sampler);
    reports.push_back(report.to_json());
    csv += report.csv_row() + "\n";
  }
  emit(c, envelope("experiment", c, {{"reports", reports}}), csv);
  return kOk;
}

// ---------------------------------------------------------------- attack

int cmd_attack(const RunConfig& c) {
  Rng rng(c.seed, kAttackStream);
  dequant::FamilyServices services;
  json trials = json::array();
  std::uint64_t successes = 0;
  std::string csv = "trial,success\n";

  if (c.attack == "learner") {
    for (std::uint64_t t = 0; t < c.trials; ++t) {
      const auto circuit = dequant::sample_family(services, c.n, rng);
      const auto r = dequant::oracle_learner_baseline([&](const BitString& x) { return circuit->eval(x); }, c.n,
                                                      c.budget, rng);
      successes += r.success;
      trials.push_back({{"trial", t}, {"queries", r.queries}, {"success", r.success}});
      csv += std::to_string(t) + "," + (r.success ? "1" : "0") + "\n";
    }
    json payload{{"attack", "learner"}, {"lambda_bits", c.n}, {"budget", c.budget},
                 {"successes", successes}, {"trials", trials}};
    emit(c, envelope("attack", c, payload), csv);
    return kOk;
  }
  if (c.attack != "pirate" && c.attack != "extract") throw UsageError("--attack must be pirate, extract or learner");
  if (c.n > 20) throw UsageError("--n must be at most 20 for the exhaustive equality verdict");

  auto codec = circuits::ProgramCodec::with_circuit_kinds();
  dequant::register_family(codec, services);
  const auto crs = ssl::Crs::setup(params_of(c), mode_of(c), c.seed, codec);
  for (std::uint64_t t = 0; t < c.trials; ++t) {
    const auto circuit = dequant::sample_family(services, c.n, rng);
    json record{{"trial", t}};
    bool verdict = false;
    try {
      if (c.attack == "extract") {
        auto impl = dequant::QuantumImplementation::plain(circuit, c.eps, rng.next_u64(), circuit->a());
        const auto ex = dequant::attack_extract(impl, services);
        record["trace"] = ex.trace;
        record["componentwise_equal"] = *ex.reconstructed == *circuit;
        record["functionally_equal"] = circuits::is_functionally_equal(*ex.reconstructed, *circuit);
        verdict = *ex.reconstructed == *circuit && record["functionally_equal"].get<bool>();
      } else {
        const auto sk = ssl::gen(*crs, rng);
        const auto lease = ssl::lessor(*crs, sk, circuit, rng);
        const auto p = dequant::ssl_breaking_pirate(crs, lease, services, rng);
        const auto& rec = *p.extraction.reconstructed;
        record["trace"] = p.extraction.trace;
        record["componentwise_equal"] = rec == *circuit;
        record["functionally_equal"] = circuits::is_functionally_equal(rec, *circuit);
        record["original_disturbance"] = ssl::trace_distance(lease.quantum, p.original.quantum);
        record["original_check_probability"] = ssl::check_accept_probability(sk, p.original.quantum);
        record["fresh_run_probability"] = ssl::run_accept_probability(*crs, p.fresh);
        verdict = rec == *circuit && record["functionally_equal"].get<bool>() &&
                  record["original_disturbance"].get<double>() <= 1e-9 &&
                  std::abs(record["fresh_run_probability"].get<double>() - 1.0) <= 1e-9;
      }
    } catch (const dequant::ExtractionFailure& e) {
      record["extraction"] = std::string("failed: ") + e.what();
    }
    record["equality_verdict"] = verdict;
    successes += verdict;
    trials.push_back(record);
    csv += std::to_string(t) + "," + (verdict ? "1" : "0") + "\n";
  }
  json payload{{"attack", c.attack}, {"lambda_bits", c.n}, {"eps", c.eps},
               {"successes", successes}, {"equality_verdict", successes == c.trials}, {"trials", trials}};
  emit(c, envelope("attack", c, payload), csv);
  return successes == c.trials ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qlease: secure software leasing simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Flags sf, cf, lf, rf, kf, ef, af;
  bool force_fail = false;

  auto* selftest = app.add_subcommand("selftest", "check the Fourier, projector, gentle-measurement and duality identities");
  add_common(selftest, sf);
  selftest->add_flag("--force-fail", force_fail, "tighten the tolerance to 1e-15");

  auto* circuit = app.add_subcommand("circuit", "sample a circuit description");
  add_common(circuit, cf);
  cf.add(circuit, "--circuit", &RunConfig::sampler, "point, wildcard or affine");

  auto* lease = app.add_subcommand("lease", "lease a circuit: writes <out>.lease.json, <out>.qlsv, <out>.sk.json");
  add_common(lease, lf);
  lf.add(lease, "--circuit", &RunConfig::circuit, "circuit JSON file");

  auto* run = app.add_subcommand("run", "run a lease on one input");
  add_common(run, rf);
  rf.add(run, "--lease", &RunConfig::lease, "lease JSON file");
  rf.add(run, "--x", &RunConfig::input, "input as bits or hex");

  auto* check = app.add_subcommand("check", "check a returned lease");
  add_common(check, kf);
  kf.add(check, "--lease", &RunConfig::lease, "lease JSON file");
  kf.add(check, "--sk", &RunConfig::sk, "secret key file");

  auto* experiment = app.add_subcommand("experiment", "run a lessor-security experiment");
  add_common(experiment, ef);
  ef.add(experiment, "--strategy", &RunConfig::strategies, "pirate strategies");
  ef.add(experiment, "--experiment", &RunConfig::experiment, "finite or infinite");
  ef.add(experiment, "--circuit", &RunConfig::sampler, "circuit sampler: point, wildcard or affine");
  ef.add(experiment, "--budget", &RunConfig::budget, "mauler guess budget");
  ef.add(experiment, "--beta", &RunConfig::beta, "agreement threshold");
  ef.add(experiment, "--threads", &RunConfig::threads, "worker threads (0: all cores)");
  experiment->add_flag("--timestamp", ef.v.timestamp, "record the wall-clock time in the report");

  auto* attack = app.add_subcommand("attack", "de-quantumization attack demos");
  add_common(attack, af);
  af.add(attack, "--attack", &RunConfig::attack, "pirate, extract or learner");
  af.add(attack, "--eps", &RunConfig::eps, "implementation error rate on the point a (extract)");
  af.add(attack, "--budget", &RunConfig::budget, "learner query budget");
  attack->add_flag("--timestamp", af.v.timestamp, "record the wall-clock time in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*selftest) {
      const auto c = sf.resolve();
      return cmd_selftest(c, selftest->get_option("--q")->count() > 0, selftest->get_option("--lambda")->count() > 0,
                          force_fail);
    }
    if (*circuit) return cmd_circuit(cf.resolve());
    if (*lease) return cmd_lease(lf.resolve());
    if (*run) return cmd_run(rf.resolve());
    if (*check) return cmd_check(kf.resolve());
    if (*experiment) return cmd_experiment(ef.resolve());
    if (*attack) return cmd_attack(af.resolve());
  } catch (const UsageError& e) {
    std::cerr << "qlease: " << e.what() << "\n";
    return kUsage;
  } catch (const quantum::CapExceeded& e) {
    std::cerr << "qlease: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "qlease: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "qlease: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
