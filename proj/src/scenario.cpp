#include "infotraj/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "infotraj/errors.hpp"
#include "infotraj/persistence.hpp"

namespace infotraj::scenario {

namespace {

// Strict view of one JSON object: every access is checked and named by path,
// and finish() rejects keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(at(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(at(key), "must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (seen_.insert(key), fallback);
  }

  int integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(at(key), "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) {
    return has(key) ? integer(key) : (seen_.insert(key), fallback);
  }

  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) fail(at(key), "expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : (seen_.insert(key), fallback);
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     std::initializer_list<const char*> allowed) {
    const std::string v = text(key, fallback);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    fail(at(key), "'" + v + "' is not one of " + list);
  }

  Eigen::VectorXd vector(const std::string& key) { return as_vector(raw(key), at(key)); }

  Fields object(const std::string& key) { return Fields(raw(key), at(key)); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) fail(at(item.key()), "unknown field");
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
  }

  static Eigen::VectorXd as_vector(const json& v, const std::string& where) {
    if (!v.is_array()) fail(where, "expected an array of numbers");
    Eigen::VectorXd out(Eigen::Index(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(where + "[" + std::to_string(i) + "]", "expected a number");
      out[Eigen::Index(i)] = v[i].get<double>();
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Eigen::MatrixXd as_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) Fields::fail(where, "expected a non-empty array of rows");
  const auto rows = Eigen::Index(v.size());
  Eigen::MatrixXd out(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string row_path = where + "[" + std::to_string(r) + "]";
    const Eigen::VectorXd row = Fields::as_vector(v[std::size_t(r)], row_path);
    if (row.size() != rows) Fields::fail(row_path, "matrix must be square");
    out.row(r) = row.transpose();
  }
  return out;
}

VehicleConfig parse_vehicle(Fields f) {
  VehicleConfig v;
  const std::string type = f.choice("type", "dubins", {"dubins", "toy_cascade"});
  if (type == "dubins") {
    v.kind = SystemKind::Dubins;
    v.speed = f.number("speed");
    v.omega_max = f.number("omega_max");
    if (!(v.speed > 0.0)) Fields::fail(f.at("speed"), "must be > 0");
    if (!(v.omega_max > 0.0)) Fields::fail(f.at("omega_max"), "must be > 0");
  } else {
    v.kind = SystemKind::ToyCascade;
  }
  f.finish();
  return v;
}

sensing::GaussianPrior parse_prior(Fields f) {
  sensing::GaussianPrior p;
  p.mean = f.vector("mean");
  p.cov = as_matrix(f.raw("cov"), f.at("cov"));
  f.finish();
  if (p.cov.rows() != p.mean.size()) Fields::fail(f.at("cov"), "size does not match the mean");
  try {
    p.check();
  } catch (const Error& e) {
    Fields::fail(f.at("cov"), std::string("must be symmetric positive definite (") + e.what() + ")");
  }
  return p;
}

sensing::DopplerSensor::Params parse_sensor(const json& j, const std::string& where) {
  Fields f(j, where);
  f.choice("type", "doppler", {"doppler"});
  sensing::DopplerSensor::Params p;
  p.altitude = f.number("altitude", p.altitude);
  p.kappa = f.number("kappa", p.kappa);
  p.sigma = f.number("sigma", p.sigma);
  p.rate = f.number("rate", p.rate);
  f.finish();
  try {
    sensing::DopplerSensor check(p);
  } catch (const Error& e) {
    Fields::fail(where, e.what());
  }
  return p;
}

grid::GridSpec parse_grid(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) Fields::fail(where, "expected a non-empty array of axes");
  std::vector<grid::Axis> axes;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Fields a(j[i], where + "[" + std::to_string(i) + "]");
    axes.push_back({a.number("min"), a.number("max"), a.integer("n"), a.boolean("periodic", false)});
    a.finish();
  }
  try {
    return grid::GridSpec(std::move(axes));
  } catch (const Error& e) {
    Fields::fail(where, e.what());
  }
}

hj::SolverConfig parse_solver(Fields f) {
  hj::SolverConfig c;
  c.horizon = f.number("horizon");
  c.cfl = f.number("cfl", c.cfl);
  c.integrator =
      f.choice("integrator", "euler", {"euler", "rk2"}) == "euler" ? hj::Integrator::Euler
                                                                   : hj::Integrator::TvdRk2;
  c.dissipation = f.choice("dissipation", "global", {"global", "local"}) == "global"
                      ? hj::DissipationMode::Global
                      : hj::DissipationMode::Local;
  c.dissipation_form =
      f.choice("dissipation_form", "difference", {"difference", "sum"}) == "difference"
          ? hj::DissipationForm::Difference
          : hj::DissipationForm::Sum;
  c.snapshot_stride = f.integer("snapshot_stride", 0);
  f.finish();
  c.check();
  return c;
}

FanConfig parse_fan(Fields f) {
  FanConfig fan;
  fan.X = f.number("X");
  fan.psi = f.number("psi");
  fan.y_min = f.number("y_min");
  fan.y_max = f.number("y_max");
  fan.count = f.integer("count");
  f.finish();
  if (fan.count < 1) Fields::fail(f.at("count"), "must be >= 1");
  if (fan.y_max < fan.y_min) Fields::fail(f.at("y_max"), "must be >= y_min");
  return fan;
}

ExtractionConfig parse_extraction(Fields f) {
  ExtractionConfig e;
  e.method = f.choice("method", "characteristic", {"characteristic", "receding"}) ==
                     "characteristic"
                 ? ExtractMethod::Characteristic
                 : ExtractMethod::Receding;
  e.dt = f.number("dt", e.dt);
  e.legs = f.integer("legs", e.legs);
  f.finish();
  if (!(e.dt > 0.0)) Fields::fail(f.at("dt"), "must be > 0");
  if (e.legs < 1) Fields::fail(f.at("legs"), "must be >= 1");
  return e;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

std::vector<StateVector> FanConfig::states() const {
  std::vector<StateVector> out;
  for (int i = 0; i < count; ++i) {
    const double y = count == 1 ? 0.5 * (y_min + y_max)
                                : y_min + (y_max - y_min) * double(i) / double(count - 1);
    out.push_back(StateVector{{X, y, psi}});
  }
  return out;
}

std::vector<StateVector> Scenario::all_initial_states() const {
  std::vector<StateVector> out = initial_states;
  if (fan) {
    const auto more = fan->states();
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

Scenario parse_scenario(const json& j) {
  Fields root(j, "");
  Scenario s;
  s.schema_version = root.integer("schema_version");
  if (s.schema_version != kSchemaVersion) {
    Fields::fail("schema_version", "unsupported version " + std::to_string(s.schema_version) +
                                       " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  s.name = root.text("name", "");
  s.vehicle = parse_vehicle(root.object("system"));
  const bool dubins = s.vehicle.kind == SystemKind::Dubins;

  if (root.has("prior")) s.prior = parse_prior(root.object("prior"));
  if (dubins && !s.prior) Fields::fail("prior", "missing required field");
  if (!dubins && s.prior) Fields::fail("prior", "not used by the toy cascade");

  if (root.has("sensors")) {
    const json& list = root.raw("sensors");
    if (!list.is_array()) Fields::fail("sensors", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      s.sensors.push_back(parse_sensor(list[i], "sensors[" + std::to_string(i) + "]"));
    }
    if (!dubins && !s.sensors.empty()) Fields::fail("sensors", "not used by the toy cascade");
    if (s.prior && !s.sensors.empty() && s.prior->dim() != 2) {
      Fields::fail("prior.mean", "doppler sensors need a 2-D target prior");
    }
  }

  if (root.has("initial_information")) {
    s.initial_information = root.vector("initial_information");
  }
  if (!dubins && !s.initial_information) {
    Fields::fail("initial_information", "missing required field");
  }

  s.grid = parse_grid(root.raw("grid"), "grid");
  const int n = dubins ? 3 : 1;
  if (s.grid.dims() != n) {
    Fields::fail("grid", "expected " + std::to_string(n) + " axes, got " +
                             std::to_string(s.grid.dims()));
  }
  if (dubins && !s.grid.axis(2).periodic) Fields::fail("grid[2].periodic", "heading axis must be periodic");

  s.solver = parse_solver(root.object("solver"));

  if (root.has("initial_states")) {
    const json& list = root.raw("initial_states");
    if (!list.is_array()) Fields::fail("initial_states", "expected an array of states");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "initial_states[" + std::to_string(i) + "]";
      StateVector x = Fields::as_vector(list[i], where);
      if (x.size() != n) Fields::fail(where, "expected " + std::to_string(n) + " components");
      if (!s.grid.contains(x)) Fields::fail(where, "outside the grid");
      s.initial_states.push_back(std::move(x));
    }
  }
  if (root.has("fan")) {
    if (!dubins) Fields::fail("fan", "only defined for the Dubins vehicle");
    s.fan = parse_fan(root.object("fan"));
    for (const auto& x : s.fan->states()) {
      if (!s.grid.contains(x)) Fields::fail("fan", "a fan start lies outside the grid");
    }
  }
  if (root.has("extraction")) s.extraction = parse_extraction(root.object("extraction"));
  s.output_dir = root.text("output_dir", "");
  if (root.has("seed")) {
    const json& v = root.raw("seed");
    if (!v.is_number_unsigned()) Fields::fail("seed", "expected a non-negative integer");
    s.seed = v.get<std::uint64_t>();
  }
  if (root.has("provenance")) {
    s.provenance = root.raw("provenance");
    if (!s.provenance.is_object()) Fields::fail("provenance", "expected an object");
  }
  root.finish();

  if (s.initial_information) {
    const auto m = s.initial_information->size();
    const Eigen::Index p = dubins ? s.prior->dim() : 1;
    if (m != p * p) {
      Fields::fail("initial_information", "expected " + std::to_string(p * p) + " entries");
    }
    try {
      (void)matrixcore::logdet_spd(matrixcore::unvec(*s.initial_information));
    } catch (const Error&) {
      Fields::fail("initial_information", "must be a symmetric positive definite matrix");
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const json j = io::read_json(path);
  try {
    return parse_scenario(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json to_json(const Scenario& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  if (s.vehicle.kind == SystemKind::Dubins) {
    j["system"] = {{"type", "dubins"}, {"speed", s.vehicle.speed}, {"omega_max", s.vehicle.omega_max}};
  } else {
    j["system"] = {{"type", "toy_cascade"}};
  }
  if (s.prior) {
    json cov = json::array();
    for (Eigen::Index r = 0; r < s.prior->cov.rows(); ++r) cov.push_back(vector_json(s.prior->cov.row(r).transpose()));
    j["prior"] = {{"mean", vector_json(s.prior->mean)}, {"cov", cov}};
  }
  json sensors = json::array();
  for (const auto& p : s.sensors) {
    sensors.push_back({{"type", "doppler"},
                       {"altitude", p.altitude},
                       {"kappa", p.kappa},
                       {"sigma", p.sigma},
                       {"rate", p.rate}});
  }
  if (s.vehicle.kind == SystemKind::Dubins) j["sensors"] = sensors;
  if (s.initial_information) j["initial_information"] = vector_json(*s.initial_information);
  j["grid"] = io::to_json(s.grid);
  j["solver"] = io::to_json(s.solver);
  json states = json::array();
  for (const auto& x : s.initial_states) states.push_back(vector_json(x));
  j["initial_states"] = states;
  if (s.fan) {
    j["fan"] = {{"X", s.fan->X},
                {"psi", s.fan->psi},
                {"y_min", s.fan->y_min},
                {"y_max", s.fan->y_max},
                {"count", s.fan->count}};
  }
  j["extraction"] = {
      {"method", s.extraction.method == ExtractMethod::Characteristic ? "characteristic" : "receding"},
      {"dt", s.extraction.dt},
      {"legs", s.extraction.legs}};
  j["output_dir"] = s.output_dir;
  j["seed"] = s.seed;
  j["provenance"] = s.provenance;
  return j;
}

std::shared_ptr<const dynamics::CascadeSystem> build_system(const Scenario& s) {
  if (s.vehicle.kind == SystemKind::ToyCascade) return dynamics::ScalarCascade::toy();
  sensing::SensorList list;
  for (const auto& p : s.sensors) list.push_back(std::make_shared<sensing::DopplerSensor>(p));
  auto suite = std::make_shared<sensing::SensorSuite>(std::move(list), *s.prior);
  return std::make_shared<dynamics::DubinsCar>(s.vehicle.speed, s.vehicle.omega_max, std::move(suite));
}

InfoVector initial_information(const Scenario& s) {
  if (s.initial_information) return *s.initial_information;
  return matrixcore::vec(sensing::prior_fim(*s.prior));
}

}  // namespace infotraj::scenario
