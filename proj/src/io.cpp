#include "duomarket/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace duomarket::io {

namespace {

const std::set<std::string> kPlanarKeys = {"schema", "area",     "bs_positions", "user_positions",
                                           "num_users", "users", "a_range",      "beta",
                                           "Q1",     "Q2",       "seed"};
const std::set<std::string> kMarketKeys = {"schema", "users", "Q1", "Q2"};

void require_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw InputError("unknown field '" + key + "' in " + where);
  }
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw InputError(what + " must be a number");
  return v.get<double>();
}

Point<double> point(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2) throw InputError(what + " must be [x, y]");
  return {number(v[0], what), number(v[1], what)};
}

bool is_market_form(const json& doc) {
  if (!doc.contains("users") || !doc["users"].is_array() || doc["users"].empty()) return false;
  const auto& first = doc["users"][0];
  return first.is_object() && (first.contains("g1") || first.contains("g2"));
}

std::string format12(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

double round12(double x) {
  if (!std::isfinite(x)) return x;
  return std::stod(format12(x));
}

Market<double> ScenarioDocument::to_market(std::vector<std::string>* log) const {
  if (market) return *market;
  return compile(*planar, log);
}

Market<double> market_from_json(const json& doc) {
  require_keys(doc, kMarketKeys, "market");
  if (!doc.contains("users") || !doc["users"].is_array()) throw InputError("market needs a users array");
  if (!doc.contains("Q1") || !doc.contains("Q2")) throw InputError("market needs Q1 and Q2");
  std::vector<User<double>> users;
  int next_id = 1;
  for (const auto& u : doc["users"]) {
    require_keys(u, {"id", "a", "g1", "g2"}, "market user");
    if (!u.contains("a") || !u.contains("g1") || !u.contains("g2")) {
      throw InputError("market user needs a, g1 and g2");
    }
    User<double> user;
    user.id = u.contains("id") ? u["id"].get<int>() : next_id;
    user.a = number(u["a"], "a");
    user.g = {number(u["g1"], "g1"), number(u["g2"], "g2")};
    next_id = user.id + 1;
    users.push_back(user);
  }
  try {
    return Market<double>(std::move(users), number(doc["Q1"], "Q1"), number(doc["Q2"], "Q2"));
  } catch (const ValidationError& e) {
    throw InputError(e.what());
  }
}

ScenarioDocument parse_scenario(const json& doc, std::optional<std::uint64_t> seed) {
  if (!doc.is_object()) throw InputError("scenario must be a JSON object");
  if (!doc.contains("schema") || !doc["schema"].is_number_integer() ||
      doc["schema"].get<int>() != kSchemaVersion) {
    throw InputError("scenario must declare \"schema\": 1");
  }

  ScenarioDocument out;
  if (is_market_form(doc)) {
    out.market = market_from_json(doc);
    return out;
  }

  require_keys(doc, kPlanarKeys, "scenario");
  PlanarScenario<double> s;
  if (doc.contains("area")) s.area = point(doc["area"], "area");
  if (doc.contains("bs_positions")) {
    const auto& bs = doc["bs_positions"];
    if (!bs.is_array() || bs.size() != 2) throw InputError("bs_positions must hold two points");
    s.bs_positions = {point(bs[0], "bs_positions"), point(bs[1], "bs_positions")};
  }
  if (doc.contains("a_range")) {
    const auto r = point(doc["a_range"], "a_range");
    s.a_range = {r.x(), r.y()};
  }
  if (doc.contains("beta")) s.beta = number(doc["beta"], "beta");
  if (doc.contains("Q1")) s.q1 = number(doc["Q1"], "Q1");
  if (doc.contains("Q2")) s.q2 = number(doc["Q2"], "Q2");
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      throw InputError("seed must be an integer");
    }
    s.seed = doc["seed"].get<std::uint64_t>();
  }
  if (seed) s.seed = *seed;

  const int sources = static_cast<int>(doc.contains("user_positions")) +
                      static_cast<int>(doc.contains("num_users")) +
                      static_cast<int>(doc.contains("users"));
  if (sources != 1) {
    throw InputError("scenario needs exactly one of user_positions, num_users, users");
  }
  if (doc.contains("user_positions")) {
    if (!doc["user_positions"].is_array()) throw InputError("user_positions must be an array");
    for (const auto& p : doc["user_positions"]) s.user_positions.push_back(point(p, "user_positions"));
  } else if (doc.contains("num_users")) {
    if (!doc["num_users"].is_number_integer() || doc["num_users"].get<long long>() <= 0) {
      throw InputError("num_users must be a positive integer");
    }
    s.user_positions = random_positions<double>(s.area, doc["num_users"].get<std::size_t>(), s.seed);
  } else {
    if (!doc["users"].is_array()) throw InputError("users must be an array");
    for (const auto& u : doc["users"]) {
      require_keys(u, {"x", "y", "a"}, "scenario user");
      if (!u.contains("x") || !u.contains("y")) throw InputError("scenario user needs x and y");
      s.user_positions.emplace_back(number(u["x"], "x"), number(u["y"], "y"));
      if (u.contains("a")) s.user_a.push_back(number(u["a"], "a"));
    }
    if (!s.user_a.empty() && s.user_a.size() != s.user_positions.size()) {
      throw InputError("either every scenario user sets a or none does");
    }
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw InputError(e.what());
  }
  out.planar = std::move(s);
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

ScenarioDocument load_scenario(const std::string& path, std::optional<std::uint64_t> seed) {
  return parse_scenario(read_json_file(path), seed);
}

json scenario_to_json(const PlanarScenario<double>& s) {
  json positions = json::array();
  for (const auto& p : s.user_positions) positions.push_back({round12(p.x()), round12(p.y())});
  return {{"schema", kSchemaVersion},
          {"area", {s.area.x(), s.area.y()}},
          {"bs_positions",
           {{s.bs_positions[0].x(), s.bs_positions[0].y()}, {s.bs_positions[1].x(), s.bs_positions[1].y()}}},
          {"user_positions", positions},
          {"a_range", {s.a_range.first, s.a_range.second}},
          {"beta", s.beta},
          {"Q1", s.q1},
          {"Q2", s.q2},
          {"seed", s.seed}};
}

json market_to_json(const Market<double>& market) {
  json users = json::array();
  for (const auto& u : market.users()) {
    users.push_back({{"id", u.id}, {"a", round12(u.a)}, {"g1", round12(u.g[0])}, {"g2", round12(u.g[1])}});
  }
  return {{"users", users},
          {"Q1", round12(market.supply(Side::one))},
          {"Q2", round12(market.supply(Side::two))}};
}

json kkt_to_json(const KktReport<double>& r) {
  return {{"p1", round12(r.p1)},
          {"p2", round12(r.p2)},
          {"max_stationarity_residual", round12(r.max_stationarity_residual)},
          {"max_complementarity_residual", round12(r.max_complementarity_residual)},
          {"clearing_residual", {round12(r.clearing_residual[0]), round12(r.clearing_residual[1])}},
          {"feasible", r.feasible},
          {"passes", r.passes},
          {"tol", r.tol}};
}

json equilibrium_to_json(const Market<double>& market, const Equilibrium<double>& eq,
                         const KktReport<double>& kkt) {
  json allocations = json::object();
  for (Index i = 0; i < market.size(); ++i) {
    allocations[std::to_string(market.user(i).id)] = {{"q1", round12(eq.q(i, 0))},
                                                       {"q2", round12(eq.q(i, 1))}};
  }
  json undecided = nullptr;
  if (eq.undecided) {
    undecided = {{"id", eq.undecided->id}, {"epsilon", round12(eq.undecided->epsilon)}};
  }
  return {{"schema", kSchemaVersion},
          {"kind", to_string(eq.kind)},
          {"p1", round12(eq.p1)},
          {"p2", round12(eq.p2)},
          {"allocations", allocations},
          {"undecided", undecided},
          {"total_utility", round12(total_utility(market, eq.q))},
          {"kkt", kkt_to_json(kkt)},
          {"market", market_to_json(market)}};
}

bool is_equilibrium_document(const json& doc) {
  return doc.is_object() && doc.contains("kind") && doc.contains("allocations");
}

EquilibriumDocument equilibrium_from_json(const json& doc) {
  if (!is_equilibrium_document(doc)) throw InputError("not an equilibrium document");
  if (!doc.contains("market")) throw InputError("equilibrium document lacks its market");
  auto market = market_from_json(doc["market"]);
  Allocation<double> q = Allocation<double>::Zero(market.size(), 2);
  const auto& alloc = doc["allocations"];
  if (!alloc.is_object()) throw InputError("allocations must be an object keyed by user id");
  for (const auto& [key, value] : alloc.items()) {
    int id = 0;
    try {
      id = std::stoi(key);
    } catch (const std::exception&) {
      throw InputError("allocation key '" + key + "' is not a user id");
    }
    const Index i = market.position_of(id);
    if (i < 0) throw InputError("allocation for unknown user " + key);
    q(i, 0) = number(value.at("q1"), "q1");
    q(i, 1) = number(value.at("q2"), "q2");
  }
  EquilibriumDocument out{std::move(market), number(doc.at("p1"), "p1"), number(doc.at("p2"), "p2"),
                          std::move(q), doc["kind"].get<std::string>(), std::nullopt};
  if (doc.contains("kkt") && doc["kkt"].contains("passes")) out.recorded_kkt_pass = doc["kkt"]["passes"].get<bool>();
  return out;
}

std::string sweep_csv(const std::vector<SweepRow<double>>& rows) {
  std::ostringstream out;
  out << "beta,p1_duo,p2_duo,p1_mono,p2_mono,kind\n";
  for (const auto& r : rows) {
    out << format12(r.beta) << ',';
    if (!r.error.empty()) {
      std::string msg = r.error.substr(0, r.error.find('\n'));
      for (char& c : msg) {
        if (c == ',' || c == '"') c = ';';
      }
      out << ",,,,Error(" << msg << ")\n";
      continue;
    }
    out << format12(r.p1_duo) << ',' << format12(r.p2_duo) << ',' << format12(r.p1_mono) << ','
        << format12(r.p2_mono) << ',' << to_string(*r.kind) << '\n';
  }
  return out.str();
}

std::string grid_csv(const RegionGrid<double>& grid) {
  std::ostringstream out;
  for (Index iy = 0; iy < grid.ny; ++iy) {
    for (Index ix = 0; ix < grid.nx; ++ix) {
      if (ix) out << ',';
      out << grid.cells(iy, ix);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<double> parse_betas(const std::string& text) {
  std::vector<double> out;
  const auto to_double = [](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw InputError("bad number '" + s + "' in beta list");
    }
    if (used != s.size()) throw InputError("bad number '" + s + "' in beta list");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(to_double(item));
    if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0]) {
      throw InputError("beta range must be start:stop:step with step > 0");
    }
    const auto steps = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long k = 0; k <= steps; ++k) out.push_back(round12(parts[0] + static_cast<double>(k) * parts[2]));
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(item));
  }
  if (out.empty()) throw InputError("empty beta list");
  return out;
}

}  // namespace duomarket::io
