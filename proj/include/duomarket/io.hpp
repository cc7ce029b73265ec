#ifndef DUOMARKET_IO_HPP
#define DUOMARKET_IO_HPP

// File formats: scenario JSON (schema 1), equilibrium JSON, sweep and grid CSV.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "duomarket/duopoly.hpp"
#include "duomarket/scenario.hpp"
#include "duomarket/welfare.hpp"

namespace duomarket::io {

using json = nlohmann::json;

/// Malformed or schema-violating input document.
class InputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

inline constexpr int kSchemaVersion = 1;

/// A parsed scenario file: either geometry (compiled on demand) or a direct market.
struct ScenarioDocument {
  std::optional<PlanarScenario<double>> planar;
  std::optional<Market<double>> market;

  /// The market, compiling geometry when needed. Compile notes go to `log`.
  Market<double> to_market(std::vector<std::string>* log = nullptr) const;
};

/// Parses a scenario document; `seed` replaces the document's seed when set.
ScenarioDocument parse_scenario(const json& doc, std::optional<std::uint64_t> seed = {});
ScenarioDocument load_scenario(const std::string& path, std::optional<std::uint64_t> seed = {});
json read_json_file(const std::string& path);

json scenario_to_json(const PlanarScenario<double>& s);

/// Rounds to 12 significant digits, the precision of every emitted number.
double round12(double x);

json market_to_json(const Market<double>& market);
Market<double> market_from_json(const json& doc);

json kkt_to_json(const KktReport<double>& r);

json equilibrium_to_json(const Market<double>& market, const Equilibrium<double>& eq,
                         const KktReport<double>& kkt);

/// An equilibrium document read back: market, prices and allocation.
struct EquilibriumDocument {
  Market<double> market;
  double p1 = 0;
  double p2 = 0;
  Allocation<double> q;
  std::string kind;
  std::optional<bool> recorded_kkt_pass;
};

bool is_equilibrium_document(const json& doc);
EquilibriumDocument equilibrium_from_json(const json& doc);

/// Header: beta,p1_duo,p2_duo,p1_mono,p2_mono,kind.
std::string sweep_csv(const std::vector<SweepRow<double>>& rows);

/// One line per grid row (lowest y first), comma-separated integer labels.
std::string grid_csv(const RegionGrid<double>& grid);

/// "2,2.5,3" or the inclusive range "2:6:0.5".
std::vector<double> parse_betas(const std::string& text);

}  // namespace duomarket::io

#endif  // DUOMARKET_IO_HPP
