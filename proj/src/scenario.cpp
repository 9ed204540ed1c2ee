#include "rollball/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "rollball/errors.hpp"

namespace rollball {

namespace {

using json = nlohmann::json;

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---- reading -------------------------------------------------------------

// A JSON node together with its dotted path, for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ValidationError(path_ + ": " + msg); }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

  Node at(const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!has(key)) throw ValidationError(child(key) + ": required field is missing");
    return {j_.at(key), child(key)};
  }

  Node at(std::size_t i) const { return {j_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    const double v = j_.get<double>();
    if (!std::isfinite(v)) fail("must be finite");
    return v;
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }

  std::size_t count() const {
    if (!j_.is_number_integer() && !j_.is_number_unsigned()) fail("expected a non-negative integer");
    const auto v = j_.get<long long>();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).number());
    return out;
  }

  std::vector<double> numbers(std::size_t n) const {
    auto v = numbers();
    if (v.size() != n) fail("expected " + std::to_string(n) + " numbers, got " + std::to_string(v.size()));
    return v;
  }

  Vec3 vec3() const {
    const auto v = numbers(3);
    return {v[0], v[1], v[2]};
  }

  double number_or(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
  Vec3 vec3_or(const char* key, const Vec3& fallback) const { return has(key) ? at(key).vec3() : fallback; }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
};

template <class F>
auto at_path(const Node& n, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    // Errors already carrying a path are passed through.
    if (what.rfind(n.path(), 0) == 0) throw;
    throw ValidationError(n.path() + ": " + what);
  }
}

PiecewiseLinear read_table(const Node& n) {
  if (n.raw().is_number()) return PiecewiseLinear::constant(n.number());
  std::vector<Breakpoint> pts;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const auto p = n.at(i).numbers(2);
    pts.push_back({p[0], p[1]});
  }
  return at_path(n, [&] { return PiecewiseLinear(std::move(pts)); });
}

AccelProfile read_accel(const Node& n) {
  const double sign = n.number_or("sign", 1.0);
  if (n.has("preset")) {
    const std::string preset = n.at("preset").string();
    if (preset == "short_pulse") return AccelProfile::short_pulse(sign);
    if (preset == "zero") return {AccelProfile::zero().table, sign};
    n.at("preset").fail("unknown preset '" + preset + "' (short_pulse|zero)");
  }
  return {read_table(n.at("table")), sign};
}

Rail read_rail(const Node& n) {
  const std::string type = n.at("type").string();
  if (type == "static") return StaticPoint{n.vec3_or("chi", Vec3::zero())};
  if (type == "circle") {
    const char* dir_key = n.has("direction") ? "direction" : "normal_spherical";
    const auto d = n.at(dir_key).numbers(3);
    return at_path(n, [&] {
      return Rail(CircleRail(n.at("radius").number(), n.vec3_or("center_offset", Vec3::zero()), {d[0], d[1], d[2]}));
    });
  }
  n.at("type").fail("unknown rail type '" + type + "' (static|circle)");
}

std::vector<Rail> read_rails(const Node& n) {
  std::vector<Rail> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(read_rail(n.at(i)));
  return out;
}

std::vector<AccelProfile> read_accels(const Node& params, std::size_t n) {
  if (!params.has("accel")) return std::vector<AccelProfile>(n, AccelProfile::zero());
  const Node a = params.at("accel");
  std::vector<AccelProfile> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(read_accel(a.at(i)));
  return out;
}

std::vector<double> read_rail_vector(const Node& ic, const char* key, std::size_t n) {
  if (!ic.has(key)) return std::vector<double>(n, 0.0);
  return ic.at(key).numbers(n);
}

std::size_t moving_masses(const Node& params) {
  const std::size_t m = params.at("masses").size();
  if (m == 0) params.at("masses").fail("must contain at least m_0");
  return m - 1;
}

BallSpec read_ball(const Node& params, const Node& ic) {
  BallSpec s;
  BallParams& p = s.params;
  const std::size_t n = moving_masses(params);
  p.masses = params.at("masses").numbers();
  p.radius = params.number_or("radius", 1.0);
  p.inertia = params.vec3_or("inertia", {1.0, 1.0, 1.0});
  p.gravity = params.number_or("gravity", 1.0);
  p.rails = read_rails(params.at("rails"));
  p.accel = read_accels(params, n);
  if (params.has("external_force")) {
    const Node f = params.at("external_force");
    if (f.has("constant")) {
      p.force = ExternalForce::constant(f.at("constant").vec3());
    } else {
      if (f.has("fx")) p.force.fx = read_table(f.at("fx"));
      if (f.has("fy")) p.force.fy = read_table(f.at("fy"));
      if (f.has("fz")) p.force.fz = read_table(f.at("fz"));
    }
  }
  s.initial.theta = read_rail_vector(ic, "theta", n);
  s.initial.theta_dot = read_rail_vector(ic, "theta_dot", n);
  if (ic.has("q")) {
    const auto q = ic.at("q").numbers(4);
    s.initial.q = Quat(q[0], q[1], q[2], q[3]);
  }
  s.initial.omega = ic.vec3_or("omega", Vec3::zero());
  if (ic.has("z")) {
    const auto z = ic.at("z").numbers(2);
    s.initial.z = {z[0], z[1]};
  }
  return s;
}

DiskSpec read_disk(const Node& params, const Node& ic) {
  DiskSpec s;
  DiskParams& p = s.params;
  const std::size_t n = moving_masses(params);
  p.masses = params.at("masses").numbers();
  p.radius = params.number_or("radius", 1.0);
  p.d2 = params.number_or("d2", 1.0);
  p.gravity = params.number_or("gravity", 1.0);
  p.rails = read_rails(params.at("rails"));
  p.accel = read_accels(params, n);
  if (params.has("force_x")) p.force_x = read_table(params.at("force_x"));
  s.initial.theta = read_rail_vector(ic, "theta", n);
  s.initial.theta_dot = read_rail_vector(ic, "theta_dot", n);
  s.initial.phi = ic.number_or("phi", 0.0);
  s.initial.phi_dot = ic.number_or("phi_dot", 0.0);
  s.z0 = ic.number_or("z", 0.0);
  return s;
}

RigidBodySpec read_rigid_body(const Node& params, const Node& ic) {
  RigidBodySpec s;
  s.inertia = params.at("inertia").vec3();
  s.omega = ic.vec3_or("omega", Vec3::zero());
  if (ic.has("q")) {
    const auto q = ic.at("q").numbers(4);
    s.q = Quat(q[0], q[1], q[2], q[3]);
  }
  return s;
}

HeavyTopSpec read_heavy_top(const Node& params, const Node& ic) {
  HeavyTopSpec s;
  s.params.inertia = params.at("inertia").vec3();
  s.params.mass = params.number_or("mass", 1.0);
  s.params.gravity = params.number_or("gravity", 1.0);
  s.params.chi = params.at("chi").vec3();
  s.omega = ic.vec3_or("omega", Vec3::zero());
  s.gamma = ic.vec3_or("gamma", Vec3::unit_z());
  return s;
}

XiPath read_xi(const Node& n) {
  if (n.has("constant")) return at_path(n, [&] { return XiPath::constant(n.at("constant").vec3()); });
  const Node sl = n.at("slerp");
  return at_path(sl, [&] {
    return XiPath::slerp(sl.at("from").vec3(), sl.at("to").vec3(), sl.at("duration").number());
  });
}

SuslovSpec read_suslov(const Node& params, const Node& ic) {
  SuslovSpec s;
  s.params.inertia = params.at("inertia").vec3();
  if (params.has("xi")) s.params.xi = read_xi(params.at("xi"));
  s.omega = ic.vec3_or("omega", Vec3::zero());
  return s;
}

IntegratorConfig read_integrator(const Node& root) {
  IntegratorConfig c;
  if (root.has("integrator")) {
    const Node n = root.at("integrator");
    if (n.has("method")) c.method = at_path(n.at("method"), [&] { return parse_method(n.at("method").string()); });
    c.abs_tol = n.number_or("abs_tol", c.abs_tol);
    c.rel_tol = n.number_or("rel_tol", c.rel_tol);
    c.h_init = n.number_or("h_init", c.h_init);
    c.h_min = n.number_or("h_min", c.h_min);
    c.h_max = n.number_or("h_max", c.h_max);  // null or absent: unbounded
    if (n.has("max_steps")) c.max_steps = n.at("max_steps").count();
    if (n.has("projection")) c.projection = n.at("projection").boolean();
    if (n.has("fixed_step")) c.fixed_step = n.at("fixed_step").boolean();
  }
  if (root.has("output")) {
    const Node o = root.at("output");
    if (o.has("samples")) c.samples = o.at("samples").count();
  }
  return c;
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// ---- writing -------------------------------------------------------------

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json to_json(const Quat& q) { return json::array({q.w, q.v.x, q.v.y, q.v.z}); }

json to_json(const PiecewiseLinear& f) {
  json a = json::array();
  for (const auto& p : f.points()) a.push_back(json::array({p.t, p.value}));
  return a;
}

json to_json(const Rail& r) {
  return std::visit(overloaded{[](const StaticPoint& s) { return json{{"type", "static"}, {"chi", to_json(s.chi)}}; },
                               [](const CircleRail& c) {
                                 const Spherical& d = c.direction();
                                 return json{{"type", "circle"},
                                             {"radius", c.radius()},
                                             {"center_offset", to_json(c.center_offset())},
                                             {"direction", json::array({d.azimuth, d.elevation, d.radius})}};
                               }},
                    r);
}

json rails_json(const std::vector<Rail>& rails) {
  json a = json::array();
  for (const auto& r : rails) a.push_back(to_json(r));
  return a;
}

json accel_json(const std::vector<AccelProfile>& accel) {
  json a = json::array();
  for (const auto& p : accel) a.push_back({{"table", to_json(p.table)}, {"sign", p.sign}});
  return a;
}

void write_system(const SystemSpec& sys, json& params, json& ic) {
  std::visit(overloaded{
                 [&](const BallSpec& s) {
                   const BallParams& p = s.params;
                   params = {{"masses", p.masses},
                             {"radius", p.radius},
                             {"inertia", to_json(p.inertia)},
                             {"gravity", p.gravity},
                             {"rails", rails_json(p.rails)},
                             {"accel", accel_json(p.accel)},
                             {"external_force",
                              {{"fx", to_json(p.force.fx)}, {"fy", to_json(p.force.fy)}, {"fz", to_json(p.force.fz)}}}};
                   ic = {{"theta", s.initial.theta},
                         {"theta_dot", s.initial.theta_dot},
                         {"q", to_json(s.initial.q)},
                         {"omega", to_json(s.initial.omega)},
                         {"z", json::array({s.initial.z[0], s.initial.z[1]})}};
                 },
                 [&](const DiskSpec& s) {
                   const DiskParams& p = s.params;
                   params = {{"masses", p.masses},
                             {"radius", p.radius},
                             {"d2", p.d2},
                             {"gravity", p.gravity},
                             {"rails", rails_json(p.rails)},
                             {"accel", accel_json(p.accel)},
                             {"force_x", to_json(p.force_x)}};
                   ic = {{"theta", s.initial.theta},
                         {"theta_dot", s.initial.theta_dot},
                         {"phi", s.initial.phi},
                         {"phi_dot", s.initial.phi_dot},
                         {"z", s.z0}};
                 },
                 [&](const RigidBodySpec& s) {
                   params = {{"inertia", to_json(s.inertia)}};
                   ic = {{"omega", to_json(s.omega)}, {"q", to_json(s.q)}};
                 },
                 [&](const HeavyTopSpec& s) {
                   params = {{"inertia", to_json(s.params.inertia)},
                             {"mass", s.params.mass},
                             {"gravity", s.params.gravity},
                             {"chi", to_json(s.params.chi)}};
                   ic = {{"omega", to_json(s.omega)}, {"gamma", to_json(s.gamma)}};
                 },
                 [&](const SuslovSpec& s) {
                   const XiPath& xi = s.params.xi;
                   json xj;
                   if (xi.is_constant())
                     xj = {{"constant", to_json(xi.from())}};
                   else
                     xj = {{"slerp", {{"from", to_json(xi.from())}, {"to", to_json(xi.to())}, {"duration", xi.duration()}}}};
                   params = {{"inertia", to_json(s.params.inertia)}, {"xi", xj}};
                   ic = {{"omega", to_json(s.omega)}};
                 },
             },
             sys);
}

json scenario_json(const Scenario& s, bool with_labels) {
  json params, ic;
  write_system(s.system, params, ic);
  const IntegratorConfig& c = s.integrator;
  json integ = {{"method", std::string(method_name(c.method))},
                {"abs_tol", c.abs_tol},
                {"rel_tol", c.rel_tol},
                {"h_init", c.h_init},
                {"h_min", c.h_min},
                {"h_max", std::isfinite(c.h_max) ? json(c.h_max) : json(nullptr)},
                {"max_steps", c.max_steps},
                {"projection", c.projection},
                {"fixed_step", c.fixed_step}};
  json j = {{"system", std::string(s.system_name())},
            {"params", params},
            {"initial", ic},
            {"tspan", json::array({s.t0, s.t1})},
            {"integrator", integ},
            {"output", {{"samples", c.samples}}}};
  if (with_labels) {
    j["name"] = s.name;
    j["description"] = s.description;
  }
  return j;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- bundled library -----------------------------------------------------

AccelProfile pulse(double sign) { return AccelProfile::short_pulse(sign); }

Scenario disk_paper_sec4() {
  Scenario s;
  s.name = "disk_paper_sec4";
  s.description = "Disk with four unit masses on concentric circles, alternating unit pulses";
  DiskSpec d;
  d.params.masses = {1, 1, 1, 1, 1};
  d.params.rails = {StaticPoint{}};
  const double radii[4] = {0.9, 19.0 / 30.0, 11.0 / 30.0, 0.1};
  for (int i = 0; i < 4; ++i) {
    d.params.rails.push_back(CircleRail(radii[i], Vec3::zero(), {0, 0, 1}));
    d.params.accel.push_back(pulse(i % 2 == 0 ? -1.0 : 1.0));
  }
  d.initial.theta.assign(4, -kPi / 2);
  d.initial.theta_dot.assign(4, 0.0);
  s.system = d;
  s.integrator.abs_tol = s.integrator.rel_tol = 1e-12;
  return s;
}

Scenario ball_paper_sec5() {
  Scenario s;
  s.name = "ball_paper_sec5";
  s.description = "Ball with three masses on tilted circles, CM initially above the GC";
  BallSpec b;
  b.params.masses = {1, 1, 1, 1};
  b.params.inertia = {0.9, 1.0, 1.1};
  b.params.rails = {StaticPoint{{0, 0, -0.05}}};
  const double radii[3] = {0.95, 0.9, 0.85};
  const Spherical dirs[3] = {{0, 0, 1}, {kPi / 2, 0, 1}, {kPi / 4, kPi / 4, 1}};
  for (int i = 0; i < 3; ++i) {
    b.params.rails.push_back(CircleRail(radii[i], Vec3::zero(), dirs[i]));
    b.params.accel.push_back(pulse(1.0));
  }
  b.initial.theta = {0.0, 2.0369, 0.7044};
  b.initial.theta_dot = {0.0, 0.0, 0.0};
  s.system = b;
  return s;
}

Scenario disk_single_mass_newton() {
  Scenario s;
  s.name = "disk_single_mass_newton";
  s.description = "Disk with one mass on a circle about the GC; comparable with the Newtonian oracle";
  DiskSpec d;
  d.params.masses = {1, 1};
  d.params.rails = {StaticPoint{}, CircleRail(0.9, Vec3::zero(), {0, 0, 1})};
  d.params.accel = {pulse(1.0)};
  d.initial.theta = {-kPi / 2};
  d.initial.theta_dot = {0.0};
  s.system = d;
  return s;
}

Scenario chaplygin_static_ball() {
  Scenario s;
  s.name = "chaplygin_static_ball";
  s.description = "Ball with static internal structure, offset CM and unequal moments";
  BallSpec b;
  b.params.masses = {1.0};
  b.params.inertia = {0.9, 1.0, 1.1};
  b.params.rails = {StaticPoint{{0.02, -0.01, -0.1}}};
  b.initial.omega = {0.3, -0.2, 1.0};
  s.system = b;
  return s;
}

Scenario free_rigid_body() {
  Scenario s;
  s.name = "free_rigid_body";
  s.description = "Torque-free asymmetric rigid body near its intermediate axis";
  s.system = RigidBodySpec{{1.0, 2.0, 3.0}, {0.1, 1.0, 0.2}, Quat::identity()};
  s.t1 = 50.0;
  s.integrator.abs_tol = s.integrator.rel_tol = 1e-12;
  return s;
}

Scenario heavy_top_lagrange() {
  Scenario s;
  s.name = "heavy_top_lagrange";
  s.description = "Symmetric heavy top with the CM on its symmetry axis";
  s.system = HeavyTopSpec{{{1.0, 1.0, 0.5}, 1.0, 1.0, {0, 0, 0.3}},
                          {0.5, -0.3, 4.0},
                          {std::sin(0.4), 0.0, std::cos(0.4)}};
  s.t1 = 50.0;
  return s;
}

Scenario suslov_fixed_xi() {
  Scenario s;
  s.name = "suslov_fixed_xi";
  s.description = "Rigid body with the constraint <Omega, E2 + E3> = 0";
  s.system = SuslovSpec{{{1.0, 2.0, 3.0}, XiPath::constant({0, 1, 1})}, {1.0, 0.5, -0.5}};
  s.t1 = 50.0;
  return s;
}

Scenario suslov_timevarying_xi() {
  Scenario s;
  s.name = "suslov_timevarying_xi";
  s.description = "Rigid body whose constraint axis turns from E3 towards E1 + E3 over ten time units";
  s.system = SuslovSpec{{{1.0, 2.0, 3.0}, XiPath::slerp({0, 0, 1}, {1, 0, 1}, 10.0)}, {1.0, 0.5, 0.0}};
  s.t1 = 50.0;
  return s;
}

// ---- systems -------------------------------------------------------------

std::vector<double> profile_breakpoints(const std::vector<AccelProfile>& accel,
                                        std::initializer_list<const PiecewiseLinear*> extra) {
  std::vector<double> out;
  for (const auto& a : accel)
    for (double t : kink_times(a.table)) out.push_back(t);
  for (const auto* f : extra)
    for (double t : kink_times(*f)) out.push_back(t);
  return out;
}

Vec3 vec3_at(const Eigen::VectorXd& x, Eigen::Index i) { return {x[i], x[i + 1], x[i + 2]}; }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view Scenario::system_name() const {
  return std::visit(overloaded{[](const BallSpec&) { return std::string_view("ball"); },
                               [](const DiskSpec&) { return std::string_view("disk"); },
                               [](const RigidBodySpec&) { return std::string_view("rigid_body"); },
                               [](const HeavyTopSpec&) { return std::string_view("heavy_top"); },
                               [](const SuslovSpec&) { return std::string_view("suslov"); }},
                    system);
}

void Scenario::validate() const {
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) throw ValidationError("tspan: need t0 < t1");
  integrator.validate();
  std::visit(overloaded{
                 [](const BallSpec& s) {
                   s.params.validate();
                   if (s.initial.theta.size() != s.params.n() || s.initial.theta_dot.size() != s.params.n())
                     throw ValidationError("initial: theta and theta_dot need one entry per moving mass");
                   if (std::abs(norm(s.initial.q) - 1.0) > Versor::kTolerance)
                     throw ValidationError("initial.q: must be a unit quaternion");
                 },
                 [](const DiskSpec& s) {
                   s.params.validate();
                   if (s.initial.theta.size() != s.params.n() || s.initial.theta_dot.size() != s.params.n())
                     throw ValidationError("initial: theta and theta_dot need one entry per moving mass");
                 },
                 [](const RigidBodySpec& s) {
                   if (!(s.inertia.x > 0 && s.inertia.y > 0 && s.inertia.z > 0))
                     throw ValidationError("params.inertia: entries must be positive");
                   if (std::abs(norm(s.q) - 1.0) > Versor::kTolerance)
                     throw ValidationError("initial.q: must be a unit quaternion");
                 },
                 [](const HeavyTopSpec& s) { s.params.validate(); },
                 [&](const SuslovSpec& s) {
                   s.params.validate();
                   if (std::abs(dot(s.omega, s.params.xi.value(t0))) > 1e-9)
                     throw ValidationError("initial.omega: must satisfy <Omega, xi(t0)> = 0");
                 },
             },
             system);
}

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("line " + std::to_string(line) + ": " + e.what(), line);
  }
  const Node root(j, "");
  if (!j.is_object()) root.fail("scenario must be a JSON object");

  Scenario s;
  if (root.has("name")) s.name = root.at("name").string();
  if (root.has("description")) s.description = root.at("description").string();
  const std::string system = root.at("system").string();
  const Node params = root.at("params");
  const json empty = json::object();
  const Node ic = root.has("initial") ? root.at("initial") : Node(empty, "initial");
  if (system == "ball")
    s.system = read_ball(params, ic);
  else if (system == "disk")
    s.system = read_disk(params, ic);
  else if (system == "rigid_body")
    s.system = read_rigid_body(params, ic);
  else if (system == "heavy_top")
    s.system = read_heavy_top(params, ic);
  else if (system == "suslov")
    s.system = read_suslov(params, ic);
  else
    root.at("system").fail("unknown system '" + system + "' (ball|disk|rigid_body|heavy_top|suslov)");
  if (root.has("tspan")) {
    const auto ts = root.at("tspan").numbers(2);
    s.t0 = ts[0];
    s.t1 = ts[1];
  }
  s.integrator = read_integrator(root);
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    Scenario s = parse_scenario(ss.str());
    if (s.name.empty()) s.name = path.stem().string();
    return s;
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string dump_scenario(const Scenario& scenario) { return scenario_json(scenario, true).dump(2) + "\n"; }

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write scenario file");
  out << dump_scenario(scenario);
}

std::string scenario_hash(const Scenario& scenario) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(scenario_json(scenario, false).dump())));
  return buf;
}

std::vector<std::string> bundled_scenario_names() {
  return {"disk_paper_sec4",       "ball_paper_sec5",  "disk_single_mass_newton", "chaplygin_static_ball",
          "free_rigid_body",       "heavy_top_lagrange", "suslov_fixed_xi",       "suslov_timevarying_xi"};
}

Scenario bundled_scenario(std::string_view name) {
  if (name == "disk_paper_sec4") return disk_paper_sec4();
  if (name == "ball_paper_sec5") return ball_paper_sec5();
  if (name == "disk_single_mass_newton") return disk_single_mass_newton();
  if (name == "chaplygin_static_ball") return chaplygin_static_ball();
  if (name == "free_rigid_body") return free_rigid_body();
  if (name == "heavy_top_lagrange") return heavy_top_lagrange();
  if (name == "suslov_fixed_xi") return suslov_fixed_xi();
  if (name == "suslov_timevarying_xi") return suslov_timevarying_xi();
  throw ValidationError("unknown bundled scenario '" + std::string(name) + "'");
}

Scenario resolve_scenario(std::string_view name_or_path) {
  const std::filesystem::path p(name_or_path);
  if (std::filesystem::exists(p)) return load_scenario(p);
  for (const auto& n : bundled_scenario_names())
    if (n == name_or_path) return bundled_scenario(n);
  throw ValidationError(std::string(name_or_path) + ": no such scenario file or bundled scenario");
}

OdeSystem make_system(const Scenario& scenario) {
  OdeSystem sys;
  std::visit(overloaded{
                 [&](const BallSpec& s) {
                   const BallParams* p = &s.params;
                   sys.rhs = [p](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { ball_rhs(*p, t, x, dx); };
                   const std::size_t q = BallLayout{p->n()}.q();
                   sys.project = [q](Eigen::VectorXd& x) { normalize_versor_block(x, q); };
                   sys.breakpoints = profile_breakpoints(p->accel, {&p->force.fx, &p->force.fy, &p->force.fz});
                 },
                 [&](const DiskSpec& s) {
                   const DiskParams* p = &s.params;
                   sys.rhs = [p](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { disk_rhs(*p, t, x, dx); };
                   sys.breakpoints = profile_breakpoints(p->accel, {&p->force_x});
                 },
                 [&](const RigidBodySpec& s) {
                   const Vec3 in = s.inertia;
                   sys.rhs = [in](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
                     free_rigid_body_packed(in, x, dx);
                   };
                   sys.project = [](Eigen::VectorXd& x) { normalize_versor_block(x, 3); };
                 },
                 [&](const HeavyTopSpec& s) {
                   const HeavyTopParams* p = &s.params;
                   sys.rhs = [p](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { heavy_top_packed(*p, x, dx); };
                 },
                 [&](const SuslovSpec& s) {
                   const SuslovParams* p = &s.params;
                   sys.rhs = [p](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
                     suslov_packed(*p, t, x, dx);
                   };
                   if (!p->xi.is_constant()) sys.breakpoints = {p->xi.duration()};
                 },
             },
             scenario.system);
  return sys;
}

Eigen::VectorXd initial_state(const Scenario& scenario) {
  return std::visit(overloaded{
                        [](const BallSpec& s) { return s.initial.pack(); },
                        [](const DiskSpec& s) { return s.initial.pack(); },
                        [](const RigidBodySpec& s) {
                          Eigen::VectorXd x(7);
                          x << s.omega.x, s.omega.y, s.omega.z, s.q.w, s.q.v.x, s.q.v.y, s.q.v.z;
                          return x;
                        },
                        [](const HeavyTopSpec& s) {
                          Eigen::VectorXd x(6);
                          x << s.omega.x, s.omega.y, s.omega.z, s.gamma.x, s.gamma.y, s.gamma.z;
                          return x;
                        },
                        [](const SuslovSpec& s) {
                          Eigen::VectorXd x(3);
                          x << s.omega.x, s.omega.y, s.omega.z;
                          return x;
                        },
                    },
                    scenario.system);
}

Trajectory simulate(const Scenario& scenario) {
  scenario.validate();
  const OdeSystem sys = make_system(scenario);
  return integrate(sys, initial_state(scenario), scenario.t0, scenario.t1, scenario.integrator);
}

Table state_table(const Scenario& scenario, const Trajectory& tr) {
  Table tab;
  tab.columns.push_back("t");
  auto rail_cols = [&](std::size_t n) {
    for (std::size_t i = 1; i <= n; ++i) tab.columns.push_back("theta_" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i) tab.columns.push_back("thetadot_" + std::to_string(i));
  };
  auto add = [&](std::initializer_list<const char*> names) {
    for (const char* c : names) tab.columns.push_back(c);
  };
  std::visit(overloaded{
                 [&](const BallSpec& s) {
                   rail_cols(s.params.n());
                   add({"q0", "q1", "q2", "q3", "Om1", "Om2", "Om3", "z1", "z2"});
                 },
                 [&](const DiskSpec& s) {
                   rail_cols(s.params.n());
                   add({"phi", "phidot", "z"});
                 },
                 [&](const RigidBodySpec&) { add({"Om1", "Om2", "Om3", "q0", "q1", "q2", "q3"}); },
                 [&](const HeavyTopSpec&) { add({"Om1", "Om2", "Om3", "G1", "G2", "G3"}); },
                 [&](const SuslovSpec&) { add({"Om1", "Om2", "Om3"}); },
             },
             scenario.system);

  const auto* disk = std::get_if<DiskSpec>(&scenario.system);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> row{tr.t[k]};
    const Eigen::VectorXd& x = tr.x[k];
    row.insert(row.end(), x.data(), x.data() + x.size());
    if (disk != nullptr)
      row.push_back(gc_position(disk->z0, disk->initial.phi, x[x.size() - 2], disk->params.radius));
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

Table diagnostics(const Scenario& scenario, const Trajectory& tr) {
  Table tab;
  auto add = [&](std::initializer_list<std::string> names) {
    for (const auto& c : names) tab.columns.push_back(c);
  };
  auto add_xyz = [&](const std::string& stem, const char* axes) {
    for (const char* a = axes; *a != '\0'; ++a) tab.columns.push_back(stem + "_" + *a);
  };
  add({"t"});

  std::visit(
      overloaded{
          [&](const BallSpec& s) {
            const BallParams& p = s.params;
            const std::size_t n = p.n();
            add({"T", "V", "E", "qnorm_sq_minus_1", "gamma_norm_sq_minus_1", "dae_residual_max"});
            for (std::size_t i = 0; i <= n; ++i) add_xyz("m" + std::to_string(i) + "_body", "xyz");
            for (std::size_t i = 0; i <= n; ++i) add_xyz("m" + std::to_string(i) + "_spatial", "xyz");
            add_xyz("cm_body", "xyz");
            add_xyz("cm_spatial", "xyz");
            add({"gc_x", "gc_y"});
            for (std::size_t k = 0; k < tr.size(); ++k) {
              const double t = tr.t[k];
              const BallState st = BallState::unpack(tr.x[k], n);
              const Energy e = energy(p, t, st);
              const FrameVars f = frame_vars(p, t, st);
              const std::vector<double> u = prescribed_u(p, t);
              const Eigen::VectorXd res = dae_residual(p, t, st, rhs_ode(p, t, st, u), u);
              std::vector<double> row{t,
                                      e.kinetic,
                                      e.potential,
                                      e.total(),
                                      squared_norm(st.q) - 1.0,
                                      squared_norm(f.gamma) - 1.0,
                                      res.lpNorm<Eigen::Infinity>()};
              const MassPositions mp = mass_positions(p, st);
              for (const auto& v : mp.body_gc) row.insert(row.end(), {v.x, v.y, v.z});
              for (const auto& v : mp.spatial_gc) row.insert(row.end(), {v.x, v.y, v.z});
              const Vec3& cb = mp.system_cm_body_gc;
              const Vec3& cs = mp.system_cm_spatial_gc;
              row.insert(row.end(), {cb.x, cb.y, cb.z, cs.x, cs.y, cs.z, st.z[0], st.z[1]});
              tab.rows.push_back(std::move(row));
            }
          },
          [&](const DiskSpec& s) {
            const DiskParams& p = s.params;
            const std::size_t n = p.n();
            add({"T", "V", "E"});
            for (std::size_t i = 0; i <= n; ++i) add_xyz("m" + std::to_string(i) + "_body", "xz");
            for (std::size_t i = 0; i <= n; ++i) add_xyz("m" + std::to_string(i) + "_spatial", "xz");
            add_xyz("cm_body", "xz");
            add_xyz("cm_spatial", "xz");
            add({"gc_x"});
            for (std::size_t k = 0; k < tr.size(); ++k) {
              const DiskState st = DiskState::unpack(tr.x[k], n);
              const Energy e = disk_energy(p, st);
              std::vector<double> row{tr.t[k], e.kinetic, e.potential, e.total()};
              const DiskMassPositions mp = disk_mass_positions(p, st);
              for (const auto& v : mp.body_gc) row.insert(row.end(), {v[0], v[1]});
              for (const auto& v : mp.spatial_gc) row.insert(row.end(), {v[0], v[1]});
              row.insert(row.end(), {mp.system_cm_body_gc[0], mp.system_cm_body_gc[1], mp.system_cm_spatial_gc[0],
                                     mp.system_cm_spatial_gc[1],
                                     gc_position(s.z0, s.initial.phi, st.phi, p.radius)});
              tab.rows.push_back(std::move(row));
            }
          },
          [&](const RigidBodySpec& s) {
            add({"T", "L1", "L2", "L3", "inertia_omega_sq", "qnorm_sq_minus_1"});
            for (std::size_t k = 0; k < tr.size(); ++k) {
              const Eigen::VectorXd& x = tr.x[k];
              const Vec3 om = vec3_at(x, 0);
              const Quat q(x[3], x[4], x[5], x[6]);
              const Vec3 l = spatial_momentum(s.inertia, Versor::normalized(q), om);
              tab.rows.push_back({tr.t[k], rotational_energy(s.inertia, om), l.x, l.y, l.z,
                                  squared_norm(hadamard(s.inertia, om)), squared_norm(q) - 1.0});
            }
          },
          [&](const HeavyTopSpec& s) {
            add({"E", "vertical_momentum", "gamma_norm_sq_minus_1"});
            for (std::size_t k = 0; k < tr.size(); ++k) {
              const Vec3 om = vec3_at(tr.x[k], 0), ga = vec3_at(tr.x[k], 3);
              tab.rows.push_back({tr.t[k], heavy_top_energy(s.params, om, ga),
                                  dot(hadamard(s.params.inertia, om), ga), squared_norm(ga) - 1.0});
            }
          },
          [&](const SuslovSpec& s) {
            add({"T", "constraint", "lambda", "xi_x", "xi_y", "xi_z"});
            for (std::size_t k = 0; k < tr.size(); ++k) {
              const double t = tr.t[k];
              const Vec3 om = vec3_at(tr.x[k], 0);
              const Vec3 xi = s.params.xi.value(t);
              tab.rows.push_back({t, rotational_energy(s.params.inertia, om), dot(om, xi),
                                  suslov_rates(s.params, t, om).lambda, xi.x, xi.y, xi.z});
            }
          },
      },
      scenario.system);
  return tab;
}

void write_csv(const Table& table, std::ostream& out) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << fmt17(row[c]);
    out << '\n';
  }
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write");
  write_csv(table, out);
  if (!out) throw Error(path.string() + ": write failed");
}

std::filesystem::path output_root(const std::filesystem::path& out) {
  if (!out.empty()) return out;
  if (const char* env = std::getenv(std::string(kOutputDirEnv).c_str()); env != nullptr && *env != '\0') return env;
  return "runs";
}

RunRecord run(const Scenario& scenario, const std::filesystem::path& out_root) {
  scenario.validate();
  RunRecord rec;
  rec.scenario_hash = scenario_hash(scenario);
  rec.version = std::string(kToolVersion);

  const auto start = std::chrono::steady_clock::now();
  const Trajectory tr = simulate(scenario);
  const Table states = state_table(scenario, tr);
  const Table diag = diagnostics(scenario, tr);
  rec.stats = tr.stats;

  const std::string name = scenario.name.empty() ? std::string("scenario") : scenario.name;
  const std::filesystem::path dir = out_root / name;
  std::filesystem::create_directories(dir);
  rec.csv = dir / (name + ".csv");
  rec.diag = dir / (name + "_diag.csv");
  rec.meta = dir / (name + "_meta.json");
  write_csv(states, rec.csv);
  write_csv(diag, rec.diag);

  std::optional<Eigen::Index> q_offset;
  if (const auto* b = std::get_if<BallSpec>(&scenario.system)) q_offset = BallLayout{b->params.n()}.q();
  if (std::holds_alternative<RigidBodySpec>(scenario.system)) q_offset = 3;
  if (q_offset) {
    double worst = 0.0;
    for (const auto& x : tr.x) worst = std::max(worst, std::abs(x.segment<4>(*q_offset).norm() - 1.0));
    rec.max_versor_norm_error = worst;
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const IntegratorConfig& c = scenario.integrator;
  json meta = {{"scenario", name},
               {"system", std::string(scenario.system_name())},
               {"scenario_hash", rec.scenario_hash},
               {"version", rec.version},
               {"method", std::string(method_name(c.method))},
               {"abs_tol", c.abs_tol},
               {"rel_tol", c.rel_tol},
               {"h_init", c.h_init},
               {"tspan", json::array({scenario.t0, scenario.t1})},
               {"samples", tr.size()},
               {"stats",
                {{"steps", tr.stats.steps},
                 {"rejected", tr.stats.rejected},
                 {"rhs_evals", tr.stats.rhs_evals},
                 {"jacobian_evals", tr.stats.jacobian_evals},
                 {"newton_iterations", tr.stats.newton_iterations},
                 {"max_projection_correction", tr.stats.max_projection_correction}}},
               {"wall_seconds", rec.wall_seconds},
               {"files",
                {{"trajectory", rec.csv.filename().string()},
                 {"diagnostics", rec.diag.filename().string()}}}};
  if (rec.max_versor_norm_error) meta["max_versor_norm_error"] = *rec.max_versor_norm_error;
  std::ofstream out(rec.meta);
  if (!out) throw Error(rec.meta.string() + ": cannot write");
  out << meta.dump(2) << '\n';
  return rec;
}

Table disk_oracle_table(const Scenario& scenario) {
  const auto* d = std::get_if<DiskSpec>(&scenario.system);
  if (d == nullptr) throw ValidationError("oracle-disk: scenario system must be 'disk'");
  DiskState probe = d->initial;
  newton_oracle(d->params, scenario.t0, probe, 0.0);  // domain check

  const Trajectory tr = simulate(scenario);
  Table tab{{"t", "phi", "phidot", "kappa_disk", "newton_oracle", "abs_diff"}, {}};
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const double t = tr.t[k];
    const DiskState st = DiskState::unpack(tr.x[k], 1);
    const std::vector<double> u{accel_eval(d->params.accel[0], t)};
    const double a = kappa_disk(d->params, t, st, u);
    const double b = newton_oracle(d->params, t, st, u[0]);
    tab.rows.push_back({t, st.phi, st.phi_dot, a, b, std::abs(a - b)});
  }
  return tab;
}

}  // namespace rollball
