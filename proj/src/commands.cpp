#include "duomarket/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "duomarket/duomarket.hpp"
#include "duomarket/io.hpp"

namespace duomarket::cli {

namespace {

using io::json;

struct Tolerances {
  double kkt = tolerance::kkt;
  double system = tolerance::system;
  double price = 1e-9;
  double clearing = tolerance::relative;
};

Tolerances resolve(const RunConfig& config) {
  Tolerances t;
  for (const auto& [name, value] : config.tolerances) {
    if (!(value > 0)) throw io::InputError("tolerance " + name + " must be positive");
    if (name == "kkt") {
      t.kkt = value;
    } else if (name == "system") {
      t.system = value;
    } else if (name == "price") {
      t.price = value;
    } else if (name == "clearing") {
      t.clearing = value;
    } else {
      throw io::InputError("unknown tolerance '" + name + "' (kkt, system, price, clearing)");
    }
  }
  return t;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

void emit(const RunConfig& config, std::ostream& out, const std::string& text) {
  if (config.output_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(config.output_path, std::ios::binary);
  if (!file) throw io::InputError("cannot write " + config.output_path);
  file << text;
}

/// Runs `body`, mapping exceptions onto the exit-code contract.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const CapExceeded& e) {
    report_error(err, "cap_exceeded", e.what());
    return kCapExceeded;
  } catch (const DegenerateBoundary& e) {
    report_error(err, "degenerate_boundary", e.what());
    return kDegenerate;
  } catch (const ValidationError& e) {
    report_error(err, "input", e.what());
    return kInputError;
  } catch (const DomainError& e) {
    report_error(err, "input", e.what());
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    report_error(err, "input", e.what());
    return kInputError;
  }
}

io::ScenarioDocument require_input(const RunConfig& config) {
  if (config.input_path.empty()) throw io::InputError("--input is required");
  return io::load_scenario(config.input_path, config.seed);
}

std::string format(double x) {
  std::ostringstream s;
  s << std::setprecision(3) << std::scientific << x;
  return s.str();
}

/// Aggregated PASS/FAIL line for one named check.
struct Tally {
  std::string name;
  double limit = 0;
  long runs = 0;
  long failures = 0;
  double worst = 0;

  void record(double residual) {
    ++runs;
    worst = std::max(worst, residual);
    if (!(residual <= limit)) ++failures;
  }
  void record(bool ok, double residual) {
    ++runs;
    worst = std::max(worst, residual);
    if (!ok) ++failures;
  }
  bool pass() const { return failures == 0; }
  std::string line() const {
    std::ostringstream s;
    s << (pass() ? "PASS " : "FAIL ") << name << " worst=" << format(worst) << " limit=" << format(limit)
      << " runs=" << runs << " failures=" << failures << '\n';
    return s.str();
  }
};

struct Verifier {
  Tolerances tol;
  Tally price_oracle{"price_oracle", 0};
  Tally equilibrium{"equilibrium_found", 0};
  Tally clearing{"market_clearing", 0};
  Tally indifference{"undecided_indifference", tolerance::indifference};
  Tally stability{"stability_oracle", 0};
  Tally contiguity{"noncontiguous_stable", 0};
  Tally system{"system_allocation", 1e-6};
  Tally utility{"system_utility", 1e-8};
  Tally kkt{"kkt", 0};

  explicit Verifier(const Tolerances& t) : tol(t) {
    price_oracle.limit = t.price;
    clearing.limit = t.clearing;
    stability.limit = t.price;
    kkt.limit = t.kkt;
  }

  void check(const Market<double>& market) {
    if (market.size() > kMaxStabilityOracleUsers) {
      throw CapExceeded("verify runs the stability oracle, limited to " +
                        std::to_string(kMaxStabilityOracleUsers) + " users; got " +
                        std::to_string(market.size()));
    }
    for (const Side side : {Side::one, Side::two}) {
      const auto p = optimal_price(market, side, market.by_alpha()).price;
      const auto oracle = bisection_price_oracle(market.a(), market.g(side), market.supply(side),
                                                 tol.price * 1e-3 * std::max(1.0, p));
      price_oracle.record(std::abs(p - oracle) / std::max(1.0, p));
    }

    std::optional<Equilibrium<double>> eq;
    try {
      eq = solve_nash(market);
      equilibrium.record(0.0);
    } catch (const std::runtime_error&) {
      equilibrium.record(1.0);
    } catch (const std::logic_error&) {
      equilibrium.record(1.0);
    }
    if (!eq) return;

    for (const Side side : {Side::one, Side::two}) {
      const double supply = market.supply(side);
      clearing.record(std::abs(eq->q.col(column(side)).sum() - supply) / supply);
    }
    if (eq->undecided) {
      const Index l = eq->undecided->position;
      const double c1 = eq->p1 * market.g()(l, 0);
      const double c2 = eq->p2 * market.g()(l, 1);
      indifference.record(std::abs(c1 - c2) / std::max(c1, c2));
    }

    const auto oracle = exhaustive_stability_oracle(market);
    const bool integer = eq->kind == EquilibriumKind::integer;
    if (integer != oracle.equilibrium.has_value()) {
      stability.record(false, 1.0);
    } else if (integer) {
      const double d = std::max(std::abs(eq->p1 - oracle.equilibrium->p1) / eq->p1,
                                std::abs(eq->p2 - oracle.equilibrium->p2) / eq->p2);
      stability.record(d);
    } else {
      stability.record(0.0);
    }
    if (oracle.full_scan) contiguity.record(static_cast<double>(oracle.stable_noncontiguous));

    try {
      const auto sys = solve_system(market, tol.system);
      system.record((sys.q - eq->q).cwiseAbs().maxCoeff());
      const double ue = total_utility(market, eq->q);
      const double us = total_utility(market, sys.q);
      utility.record(std::abs(ue - us) / std::max(1.0, std::abs(us)));
    } catch (const ConvergenceError&) {
      system.record(false, 1.0);
    }

    const auto report = check_kkt(market, eq->q, eq->p1, eq->p2, tol.kkt);
    kkt.record(report.passes, std::max({report.max_stationarity_residual,
                                        report.max_complementarity_residual,
                                        std::abs(report.clearing_residual[0]),
                                        std::abs(report.clearing_residual[1])}));
  }

  int finish(std::ostream& out) const {
    bool ok = true;
    for (const Tally* t : {&price_oracle, &equilibrium, &clearing, &indifference, &stability,
                           &contiguity, &system, &utility, &kkt}) {
      if (t->runs == 0) continue;
      out << t->line();
      ok = ok && t->pass();
    }
    return ok ? kOk : 4;
  }
};

std::pair<Index, Index> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw io::InputError("grid must look like 200x100");
  try {
    std::size_t used_x = 0;
    std::size_t used_y = 0;
    const long nx = std::stol(text.substr(0, x), &used_x);
    const long ny = std::stol(text.substr(x + 1), &used_y);
    if (used_x != x || used_y != text.size() - x - 1 || nx <= 0 || ny <= 0) throw std::invalid_argument("");
    return {nx, ny};
  } catch (const std::exception&) {
    throw io::InputError("grid must look like 200x100");
  }
}

}  // namespace

int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto tol = resolve(config);
    std::vector<std::string> notes;
    const auto market = require_input(config).to_market(&notes);
    for (const auto& n : notes) err << n << '\n';
    const auto eq = solve_nash(market);
    const auto kkt = check_kkt(market, eq.q, eq.p1, eq.p2, tol.kkt);
    emit(config, out, io::equilibrium_to_json(market, eq, kkt).dump(2) + "\n");
    return static_cast<int>(kOk);
  });
}

int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    resolve(config);
    if (!config.betas) throw io::InputError("sweep needs --betas");
    const auto betas = io::parse_betas(*config.betas);
    const auto doc = require_input(config);
    if (!doc.planar) throw io::InputError("sweep needs a planar scenario, not a direct market");
    const auto rows = sweep_beta(*doc.planar, betas);
    emit(config, out, io::sweep_csv(rows));
    const bool failed = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.error.empty(); });
    for (const auto& r : rows) {
      if (!r.error.empty()) report_error(err, "row_failed", "beta=" + std::to_string(r.beta) + ": " + r.error);
    }
    return static_cast<int>(failed ? kInputError : kOk);
  });
}

int cmd_regions(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    resolve(config);
    if (!config.grid) throw io::InputError("regions needs --grid NXxNY");
    const auto [nx, ny] = parse_grid(*config.grid);
    if (!(config.probe_a > 0)) throw io::InputError("--probe-a must be positive");
    const auto doc = require_input(config);
    if (!doc.planar) throw io::InputError("regions needs a planar scenario, not a direct market");
    const auto eq = solve_nash(doc.to_market());
    const auto grid = region_grid(*doc.planar, eq.p1, eq.p2, config.probe_a, nx, ny, config.three_region);
    emit(config, out, io::grid_csv(grid));
    return static_cast<int>(kOk);
  });
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto tol = resolve(config);
    std::ostringstream text;
    int code = kOk;

    if (config.input_path.empty()) {
      if (config.batch <= 0 || config.batch_users <= 0) throw io::InputError("batch sizes must be positive");
      SplitMix64 rng(config.seed.value_or(42));
      Verifier v(tol);
      for (int b = 0; b < config.batch; ++b) v.check(random_market<double>(rng, config.batch_users));
      code = v.finish(text);
    } else {
      const auto doc = io::read_json_file(config.input_path);
      if (io::is_equilibrium_document(doc)) {
        const auto replay = io::equilibrium_from_json(doc);
        const auto report = check_kkt(replay.market, replay.q, replay.p1, replay.p2, tol.kkt);
        text << (report.passes ? "PASS" : "FAIL") << " kkt stationarity="
             << format(report.max_stationarity_residual)
             << " complementarity=" << format(report.max_complementarity_residual)
             << " clearing=" << format(report.clearing_residual[0]) << ','
             << format(report.clearing_residual[1]) << " feasible=" << (report.feasible ? "yes" : "no")
             << '\n';
        if (replay.recorded_kkt_pass) {
          const bool same = *replay.recorded_kkt_pass == report.passes;
          text << (same ? "PASS" : "FAIL") << " kkt_roundtrip recorded="
               << (*replay.recorded_kkt_pass ? "pass" : "fail")
               << " recomputed=" << (report.passes ? "pass" : "fail") << '\n';
        }
        code = report.passes ? kOk : 4;
      } else {
        Verifier v(tol);
        v.check(io::parse_scenario(doc, config.seed).to_market());
        code = v.finish(text);
      }
    }
    emit(config, out, text.str());
    return code;
  });
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  switch (config.command) {
    case Command::solve:
      return cmd_solve(config, out, err);
    case Command::sweep:
      return cmd_sweep(config, out, err);
    case Command::regions:
      return cmd_regions(config, out, err);
    case Command::verify:
      return cmd_verify(config, out, err);
  }
  return kInputError;
}

}  // namespace duomarket::cli
