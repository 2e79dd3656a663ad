#include "capvertex/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

#include "capvertex/diagnostics.hpp"
#include "capvertex/errors.hpp"
#include "capvertex/geom_core.hpp"
#include "capvertex/mesh_io.hpp"
#include "capvertex/seed.hpp"
#include "capvertex/verify.hpp"

namespace capvertex {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Classify: return "classify";
    case ScenarioKind::WedgeCap: return "wedge_cap";
    case ScenarioKind::TrihedralCap: return "trihedral_cap";
    case ScenarioKind::CylinderCap: return "cylinder_cap";
    case ScenarioKind::RectanglePDE: return "rectangle_pde";
    case ScenarioKind::Evolve: return "evolve";
    case ScenarioKind::Verify: return "verify";
  }
  return "?";
}

const char* subcommand_for(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Classify: return "classify";
    case ScenarioKind::WedgeCap:
    case ScenarioKind::TrihedralCap:
    case ScenarioKind::CylinderCap: return "cap";
    case ScenarioKind::RectanglePDE: return "solve-graph";
    case ScenarioKind::Evolve: return "evolve";
    case ScenarioKind::Verify: return "verify";
  }
  return "?";
}

namespace {

// Input iterator that tracks the line of the last non-blank character read.
struct CountingIter {
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  int* line = nullptr;
  int* last = nullptr;

  reference operator*() const { return *p; }
  CountingIter& operator++() {
    if (*p == '\n') ++*line;
    else if (*p != ' ' && *p != '\t' && *p != '\r') *last = *line;
    ++p;
    return *this;
  }
  CountingIter operator++(int) {
    CountingIter old = *this;
    ++*this;
    return old;
  }
  bool operator==(const CountingIter& o) const { return p == o.p; }
  bool operator!=(const CountingIter& o) const { return p != o.p; }
};

std::string escape_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Records the line of every object key and array element by JSON pointer.
class LineRecorder : public nlohmann::json_sax<json> {
 public:
  LineRecorder(int* line, std::map<std::string, int>* lines) : line_(line), lines_(lines) {}

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override { return open(false); }
  bool start_array(std::size_t) override { return open(true); }
  bool end_object() override { return close(); }
  bool end_array() override { return close(); }
  bool key(string_t& k) override {
    stack_.back().key = escape_token(k);
    (*lines_)[path()] = *line_ + 1;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  struct Frame {
    bool array;
    int index = 0;
    std::string key;
  };

  // Pointer to the current child of the innermost container.
  std::string path() const {
    std::string p;
    for (const Frame& f : stack_) p += "/" + (f.array ? std::to_string(f.index) : f.key);
    return p;
  }
  void record_element() {
    if (stack_.empty()) (*lines_)[""] = *line_ + 1;
    else if (stack_.back().array) (*lines_)[path()] = *line_ + 1;
  }
  bool value() {
    record_element();
    if (!stack_.empty() && stack_.back().array) ++stack_.back().index;
    return true;
  }
  bool open(bool array) {
    record_element();
    stack_.push_back({array, 0, {}});
    return true;
  }
  bool close() {
    stack_.pop_back();
    if (!stack_.empty() && stack_.back().array) ++stack_.back().index;
    return true;
  }

  int* line_;
  std::map<std::string, int>* lines_;
  std::vector<Frame> stack_;
};

struct Node {
  const json* j;
  std::string ptr;
};

class Schema {
 public:
  Schema(const json& root, std::map<std::string, int> lines, std::string source)
      : root_(root), lines_(std::move(lines)), source_(std::move(source)) {}

  Node root() const { return {&root_, ""}; }

  [[noreturn]] void fail(const Node& n, const std::string& msg) const {
    const int line = line_of(n.ptr);
    std::ostringstream os;
    os << source_ << ':' << line << ": " << msg;
    throw ConfigError(os.str(), line);
  }

  std::string name(const Node& n) const { return n.ptr.empty() ? "config" : "'" + n.ptr + "'"; }

  void object(const Node& n) const {
    if (!n.j->is_object()) fail(n, name(n) + " must be an object");
  }

  void only_keys(const Node& n, std::initializer_list<const char*> keys) const {
    object(n);
    for (auto it = n.j->begin(); it != n.j->end(); ++it) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
        fail(child_node(n, it.key()), "unknown key '" + it.key() + "'");
    }
  }

  bool has(const Node& n, const char* key) const { return n.j->contains(key); }

  Node get(const Node& n, const char* key) const {
    if (!has(n, key)) fail(n, "missing key '" + std::string(key) + "'");
    return child_node(n, key);
  }

  double number(const Node& n) const {
    if (!n.j->is_number()) fail(n, name(n) + " must be a number");
    const double v = n.j->get<double>();
    if (!std::isfinite(v)) fail(n, name(n) + " must be finite");
    return v;
  }

  double positive(const Node& n) const {
    const double v = number(n);
    if (!(v > 0.0)) fail(n, name(n) + " must be positive");
    return v;
  }

  double angle(const Node& n) const {
    const double v = number(n);
    if (v < 0.0 || v > kPi) fail(n, name(n) + " must be an angle in [0, pi]");
    return v;
  }

  long long integer(const Node& n, long long lo, long long hi) const {
    if (!n.j->is_number_integer()) fail(n, name(n) + " must be an integer");
    const long long v = n.j->get<long long>();
    if (v < lo || v > hi) {
      std::ostringstream os;
      os << name(n) << " must be in [" << lo << ", " << hi << "]";
      fail(n, os.str());
    }
    return v;
  }

  std::uint64_t u64(const Node& n) const {
    if (!n.j->is_number_unsigned()) fail(n, name(n) + " must be a non-negative integer");
    return n.j->get<std::uint64_t>();
  }

  bool boolean(const Node& n) const {
    if (!n.j->is_boolean()) fail(n, name(n) + " must be true or false");
    return n.j->get<bool>();
  }

  std::string string(const Node& n) const {
    if (!n.j->is_string()) fail(n, name(n) + " must be a string");
    return n.j->get<std::string>();
  }

  std::vector<Node> array(const Node& n, std::size_t min, std::size_t max) const {
    if (!n.j->is_array()) fail(n, name(n) + " must be an array");
    if (n.j->size() < min || n.j->size() > max) {
      std::ostringstream os;
      os << name(n) << " must have ";
      if (min == max) os << min;
      else os << min << " to " << max;
      os << " entries";
      fail(n, os.str());
    }
    std::vector<Node> out;
    for (std::size_t k = 0; k < n.j->size(); ++k)
      out.push_back({&(*n.j)[k], n.ptr + "/" + std::to_string(k)});
    return out;
  }

  Vec3 vec3(const Node& n) const {
    const auto items = array(n, 3, 3);
    return {number(items[0]), number(items[1]), number(items[2])};
  }

 private:
  Node child_node(const Node& n, const std::string& key) const {
    return {&(*n.j)[key], n.ptr + "/" + escape_token(key)};
  }

  int line_of(std::string ptr) const {
    while (true) {
      const auto it = lines_.find(ptr);
      if (it != lines_.end()) return it->second;
      if (ptr.empty()) return 1;
      ptr.erase(ptr.rfind('/'));
    }
  }

  const json& root_;
  std::map<std::string, int> lines_;
  std::string source_;
};

std::array<double, 3> three_angles(const Schema& s, const Node& n) {
  const auto items = s.array(n, 3, 3);
  return {s.angle(items[0]), s.angle(items[1]), s.angle(items[2])};
}

SupportConfig parse_support(const Schema& s, const Node& n) {
  s.object(n);
  const std::string type = s.string(s.get(n, "type"));
  try {
    if (type == "wedge") {
      s.only_keys(n, {"type", "alpha", "gammas"});
      const Node a = s.get(n, "alpha");
      const double alpha = s.positive(a);
      if (!(alpha < kPi / 2)) s.fail(a, "'alpha' must be below pi/2");
      const auto g = s.array(s.get(n, "gammas"), 2, 2);
      return WedgeConfig::canonical(alpha, s.angle(g[0]), s.angle(g[1]));
    }
    if (type == "orthogonal") {
      s.only_keys(n, {"type", "gammas"});
      return TrihedralConfig::orthogonal(three_angles(s, s.get(n, "gammas")));
    }
    if (type == "equilateral_prism") {
      s.only_keys(n, {"type", "inradius", "gammas"});
      const double r = s.positive(s.get(n, "inradius"));
      return TrihedralConfig::equilateral_prism(r, three_angles(s, s.get(n, "gammas")));
    }
    if (type == "planes") {
      s.only_keys(n, {"type", "planes"});
      std::vector<PlaneSupport> planes;
      for (const Node& p : s.array(s.get(n, "planes"), 2, 3)) {
        s.only_keys(p, {"normal", "offset", "gamma"});
        const Node nn = s.get(p, "normal");
        const Vec3 normal = s.vec3(nn);
        if (!(normal.norm() > 0.0)) s.fail(nn, "plane normal must be nonzero");
        const double offset = s.has(p, "offset") ? s.number(s.get(p, "offset")) : 0.0;
        planes.emplace_back(normal, offset, s.angle(s.get(p, "gamma")));
      }
      if (planes.size() == 2) return WedgeConfig::from_planes(planes[0], planes[1]);
      return TrihedralConfig::from_planes({planes[0], planes[1], planes[2]});
    }
  } catch (const DomainError& e) {
    s.fail(n, std::string("invalid support: ") + e.what());
  }
  s.fail(s.get(n, "type"),
         "unknown support type '" + type + "' (wedge, orthogonal, equilateral_prism, planes)");
}

ScenarioKind parse_kind(const Schema& s, const Node& n) {
  const std::string k = s.string(n);
  for (ScenarioKind kind :
       {ScenarioKind::Classify, ScenarioKind::WedgeCap, ScenarioKind::TrihedralCap,
        ScenarioKind::CylinderCap, ScenarioKind::RectanglePDE, ScenarioKind::Evolve,
        ScenarioKind::Verify})
    if (k == to_string(kind)) return kind;
  s.fail(n, "unknown kind '" + k + "'");
}

void check_support_kind(const Schema& s, const Node& n, ScenarioKind kind,
                        const SupportConfig& support) {
  const auto* t = std::get_if<TrihedralConfig>(&support);
  if (kind == ScenarioKind::WedgeCap && t) s.fail(n, "wedge_cap needs a two-plane support");
  if (kind == ScenarioKind::TrihedralCap && (!t || t->kind != TrihedralKind::Apex))
    s.fail(n, "trihedral_cap needs three planes meeting in an apex");
  if (kind == ScenarioKind::CylinderCap && (!t || t->kind != TrihedralKind::Cylinder))
    s.fail(n, "cylinder_cap needs three planes with a common generator");
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
    std::string what = e.what();
    const auto cut = what.find("syntax error");
    if (cut != std::string::npos) what = what.substr(cut);
    std::ostringstream os;
    os << source << ':' << line << ": " << what;
    throw ConfigError(os.str(), line);
  }

  std::map<std::string, int> lines;
  int line = 0, last = 0;
  LineRecorder rec(&last, &lines);
  json::sax_parse(CountingIter{text.data(), &line, &last},
                  CountingIter{text.data() + text.size(), &line, &last}, &rec);

  const Schema s(root, std::move(lines), source);
  const Node r = s.root();
  s.object(r);
  ScenarioConfig c;
  c.kind = parse_kind(s, s.get(r, "kind"));
  if (s.has(r, "seed")) c.seed = s.u64(s.get(r, "seed"));

  switch (c.kind) {
    case ScenarioKind::Classify: {
      s.only_keys(r, {"kind", "seed", "alpha", "grid", "gamma_min", "gamma_max"});
      const Node a = s.get(r, "alpha");
      c.alpha = s.positive(a);
      if (!(c.alpha < kPi / 2)) s.fail(a, "'alpha' must be below pi/2");
      if (s.has(r, "grid")) c.grid = static_cast<int>(s.integer(s.get(r, "grid"), 2, 4001));
      if (s.has(r, "gamma_min")) c.gamma_min = s.angle(s.get(r, "gamma_min"));
      if (s.has(r, "gamma_max")) c.gamma_max = s.angle(s.get(r, "gamma_max"));
      if (!(c.gamma_min < c.gamma_max)) s.fail(r, "'gamma_min' must be below 'gamma_max'");
      break;
    }
    case ScenarioKind::WedgeCap:
    case ScenarioKind::TrihedralCap:
    case ScenarioKind::CylinderCap: {
      s.only_keys(r, {"kind", "seed", "support", "h", "refinement", "target_volume"});
      const Node sn = s.get(r, "support");
      c.support = parse_support(s, sn);
      check_support_kind(s, sn, c.kind, *c.support);
      if (s.has(r, "h")) c.h = s.number(s.get(r, "h"));
      if (c.kind == ScenarioKind::WedgeCap && !c.h) s.fail(r, "missing key 'h'");
      if (c.kind == ScenarioKind::WedgeCap && *c.h == 0.0)
        s.fail(s.get(r, "h"), "'h' must be nonzero for a wedge cap");
      if (c.kind == ScenarioKind::TrihedralCap && !c.h) s.fail(r, "missing key 'h'");
      if (s.has(r, "refinement"))
        c.refinement = static_cast<int>(s.integer(s.get(r, "refinement"), 0, 6));
      if (s.has(r, "target_volume")) c.target_volume = s.positive(s.get(r, "target_volume"));
      break;
    }
    case ScenarioKind::RectanglePDE: {
      s.only_keys(r, {"kind", "seed", "a", "b", "gamma", "gammas", "h", "grid_n", "tol"});
      c.rectangle.a = s.positive(s.get(r, "a"));
      c.rectangle.b = s.positive(s.get(r, "b"));
      if (s.has(r, "gamma") == s.has(r, "gammas"))
        s.fail(r, "give exactly one of 'gamma' and 'gammas'");
      if (s.has(r, "gamma")) {
        c.rectangle.gammas.fill(s.angle(s.get(r, "gamma")));
      } else {
        const auto g = s.array(s.get(r, "gammas"), 4, 4);
        for (int k = 0; k < 4; ++k) c.rectangle.gammas[k] = s.angle(g[k]);
      }
      if (s.has(r, "h")) c.rectangle.h = s.number(s.get(r, "h"));
      if (s.has(r, "grid_n"))
        c.rectangle.grid_n = static_cast<int>(s.integer(s.get(r, "grid_n"), 16, 1024));
      if (s.has(r, "tol")) c.solve_tol = s.positive(s.get(r, "tol"));
      break;
    }
    case ScenarioKind::Evolve: {
      s.only_keys(r, {"kind", "seed", "support", "target_volume", "refinement", "h",
                      "perturbation", "volume_mode", "max_iters", "grad_tol", "smoothing",
                      "memory", "kernels"});
      c.support = parse_support(s, s.get(r, "support"));
      c.target_volume = s.positive(s.get(r, "target_volume"));
      c.refinement = static_cast<int>(s.integer(s.get(r, "refinement"), 0, 6));
      if (s.has(r, "h")) c.h = s.number(s.get(r, "h"));
      if (s.has(r, "perturbation")) {
        const Node p = s.get(r, "perturbation");
        c.perturbation = s.number(p);
        if (c.perturbation < 0.0 || c.perturbation > 0.2) s.fail(p, "'perturbation' must be in [0, 0.2]");
      }
      if (s.has(r, "volume_mode")) {
        const Node m = s.get(r, "volume_mode");
        const std::string mode = s.string(m);
        if (mode == "fixed") c.evolve.volume_mode = VolumeMode::Fixed;
        else if (mode == "pressure") c.evolve.volume_mode = VolumeMode::Pressure;
        else s.fail(m, "'volume_mode' must be \"fixed\" or \"pressure\"");
      }
      if (s.has(r, "max_iters"))
        c.evolve.max_iters = static_cast<int>(s.integer(s.get(r, "max_iters"), 1, 1000000));
      if (s.has(r, "grad_tol")) c.evolve.grad_tol = s.positive(s.get(r, "grad_tol"));
      if (s.has(r, "smoothing")) {
        const Node m = s.get(r, "smoothing");
        c.evolve.smoothing = s.number(m);
        if (c.evolve.smoothing < 0.0 || c.evolve.smoothing >= 1.0) s.fail(m, "'smoothing' must be in [0, 1)");
      }
      if (s.has(r, "memory"))
        c.evolve.memory = static_cast<int>(s.integer(s.get(r, "memory"), 0, 100));
      if (s.has(r, "kernels")) {
        const Node m = s.get(r, "kernels");
        const std::string mode = s.string(m);
        if (mode == "serial") c.evolve.mode = KernelMode::Serial;
        else if (mode == "parallel") c.evolve.mode = KernelMode::Parallel;
        else s.fail(m, "'kernels' must be \"serial\" or \"parallel\"");
      }
      break;
    }
    case ScenarioKind::Verify: {
      s.only_keys(r, {"kind", "seed", "suite"});
      const Node n = s.get(r, "suite");
      c.suite = s.string(n);
      const auto& names = suite_names();
      if (std::find(names.begin(), names.end(), c.suite) == names.end())
        s.fail(n, "unknown suite '" + c.suite + "'");
      break;
    }
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot read config file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path);
}

namespace {

ojson number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

ojson vec3(const Vec3& v) { return ojson::array({number(v.x()), number(v.y()), number(v.z())}); }

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

RunResult run_classify(const ScenarioConfig& c) {
  std::ostringstream csv;
  csv << "gamma1,gamma2,class,numerator\r\n";
  std::map<std::string, int> counts;
  const double step = (c.gamma_max - c.gamma_min) / (c.grid - 1);
  for (int i = 0; i < c.grid; ++i) {
    const double g1 = i + 1 == c.grid ? c.gamma_max : c.gamma_min + i * step;
    for (int j = 0; j < c.grid; ++j) {
      const double g2 = j + 1 == c.grid ? c.gamma_max : c.gamma_min + j * step;
      const AdmissibilityClass cls = classify_data(c.alpha, g1, g2);
      const std::string tag(to_string(cls.tag));
      ++counts[tag];
      csv << format_double(g1) << ',' << format_double(g2) << ',' << tag << ','
          << format_double(cls.numerator) << "\r\n";
    }
  }
  ojson j;
  j["kind"] = "classify";
  j["seed"] = c.seed;
  j["alpha"] = c.alpha;
  j["grid"] = c.grid;
  j["gamma_min"] = c.gamma_min;
  j["gamma_max"] = c.gamma_max;
  ojson cj = ojson::object();
  for (const char* tag : {"InteriorQ", "BoundaryQ_D1", "BoundaryQ_D2", "Corner", "D1", "D2"})
    cj[tag] = counts[tag];
  j["counts"] = cj;
  RunResult out;
  out.artifacts = {{"classify.csv", csv.str()}, {"summary.json", dump(j)}};
  out.summary = "classified " + std::to_string(c.grid * c.grid) + " data points, " +
                std::to_string(counts["InteriorQ"]) + " InteriorQ";
  return out;
}

double degrees(double rad) { return rad * 180.0 / kPi; }

const std::vector<PlaneSupport>& planes_of(const SupportConfig& s, std::vector<PlaneSupport>& buf) {
  buf.clear();
  if (const auto* w = std::get_if<WedgeConfig>(&s)) {
    buf = {w->plane1, w->plane2};
  } else {
    const auto& t = std::get<TrihedralConfig>(s);
    buf.assign(t.planes.begin(), t.planes.end());
  }
  return buf;
}

ojson cap_json(const SphericalCap& cap) {
  ojson j;
  j["solution"] = "sphere";
  j["center"] = vec3(cap.center);
  j["radius"] = number(cap.radius);
  j["h"] = number(cap.h_signed);
  j["liquid_inside_ball"] = cap.liquid_inside_ball;
  j["degenerate"] = cap.degenerate;
  ojson verts = ojson::array();
  for (const Vec3& v : cap.vertices) verts.push_back(vec3(v));
  j["vertices"] = verts;

  std::vector<PlaneSupport> buf;
  const auto& planes = planes_of(cap.config, buf);
  ojson contacts = ojson::array();
  double worst = 0.0;
  for (const auto& p : planes) {
    const double cm = cap_contact_cos(cap, p);
    const double err = std::abs(cm - std::cos(p.gamma()));
    worst = std::max(worst, err);
    contacts.push_back({{"gamma", number(p.gamma())},
                        {"measured", number(std::acos(std::clamp(cm, -1.0, 1.0)))},
                        {"cos_error", number(err)}});
  }
  j["contact_angles"] = contacts;
  j["max_cos_error"] = number(worst);

  ojson angles = ojson::array();
  if (const auto* w = std::get_if<WedgeConfig>(&cap.config)) {
    const VertexAngleResult pred = vertex_angle(w->alpha, w->gamma1(), w->gamma2());
    for (const Vec3& v : cap.vertices) {
      const double m = cap_vertex_angle(cap, w->plane1, w->plane2, v);
      angles.push_back({{"vertex", vec3(v)},
                        {"measured", number(m)},
                        {"predicted", number(pred.two_beta)},
                        {"deviation_deg", number(degrees(std::abs(m - pred.two_beta)))}});
    }
  }
  j["vertex_angles"] = angles;
  return j;
}

// Scale a seed mesh about `p`, which lies on every support plane.
void scale_about(TriMeshDrop& drop, const Vec3& p, double s) {
  for (Vec3& v : drop.surface.vertices) v = p + s * (v - p);
  if (drop.reference) {
    drop.reference->center = p + s * (drop.reference->center - p);
    drop.reference->radius *= s;
  }
  drop.target_volume *= s * s * s;
  drop.lagrange_h /= s;
}

RunResult run_cap(const ScenarioConfig& c) {
  RunResult out;
  ojson j;
  j["kind"] = to_string(c.kind);
  j["seed"] = c.seed;
  std::optional<SphericalCap> cap;
  Vec3 scale_point = Vec3::Zero();
  if (c.kind == ScenarioKind::WedgeCap) {
    const auto& w = std::get<WedgeConfig>(*c.support);
    cap = wedge_cap(w, *c.h);
    scale_point = w.edge.point;
    j["classification"] = std::string(to_string(classify_data(w.alpha, w.gamma1(), w.gamma2()).tag));
  } else if (c.kind == ScenarioKind::TrihedralCap) {
    const auto& t = std::get<TrihedralConfig>(*c.support);
    scale_point = t.apex;
    const TrihedralSolution sol = trihedral_cap(t, *c.h);
    if (const auto* sc = std::get_if<SphericalCap>(&sol)) {
      cap = *sc;
    } else {
      const auto& pl = std::get<PlanarSolution>(sol);
      j["solution"] = "plane";
      j["normal"] = vec3(pl.normal);
      j["offset"] = number(pl.offset);
      ojson contacts = ojson::array();
      for (const auto& p : t.planes) {
        const double cm = pl.normal.dot(p.normal());
        contacts.push_back({{"gamma", number(p.gamma())},
                            {"measured", number(std::acos(std::clamp(cm, -1.0, 1.0)))},
                            {"cos_error", number(std::abs(cm - std::cos(p.gamma())))}});
      }
      j["contact_angles"] = contacts;
    }
  } else {
    cap = cylinder_cap(std::get<TrihedralConfig>(*c.support), c.h);
  }
  if (cap) {
    const ojson cj = cap_json(*cap);
    for (auto it = cj.begin(); it != cj.end(); ++it) j[it.key()] = it.value();
  }
  if (c.refinement >= 0) {
    if (cap && cap->degenerate) throw NoSolution("degenerate cap has no mesh");
    SeedOptions so;
    so.h = c.h;
    TriMeshDrop drop = seed_mesh(*c.support, c.target_volume, c.refinement, so);
    if (c.kind != ScenarioKind::CylinderCap && cap && drop.reference)
      scale_about(drop, scale_point, cap->radius / drop.reference->radius);
    j["mesh_vertices"] = drop.surface.vertices.size();
    j["mesh_triangles"] = drop.surface.triangles.size();
    out.artifacts.push_back({"cap.obj", write_obj(drop)});
  }
  out.artifacts.insert(out.artifacts.begin(), {"cap.json", dump(j)});
  out.summary = cap ? "sphere of radius " + format_double(cap->radius) : "planar solution";
  return out;
}

RunResult run_rectangle(const ScenarioConfig& c) {
  SolveOptions so;
  so.tol = c.solve_tol;
  so.polish_to = std::min(so.polish_to, c.solve_tol);
  const GraphField sol = solve_rectangle(c.rectangle, so);
  const RectangleGrid g = RectangleGrid::from_problem(c.rectangle);
  const SurfaceMesh mesh = height_field_mesh(sol.u);
  const SphereFit fit = fit_sphere(mesh.vertices);

  ojson j;
  j["kind"] = "rectangle_pde";
  j["seed"] = c.seed;
  j["a"] = c.rectangle.a;
  j["b"] = c.rectangle.b;
  j["gammas"] = ojson::array({c.rectangle.gammas[0], c.rectangle.gammas[1],
                              c.rectangle.gammas[2], c.rectangle.gammas[3]});
  j["h"] = number(c.rectangle.h.value_or(
      compatibility_h(c.rectangle.a, c.rectangle.b, c.rectangle.gammas)));
  j["nx"] = g.nx;
  j["ny"] = g.ny;
  j["iterations"] = sol.convergence.iterations;
  j["final_residual"] = number(sol.convergence.final_residual);
  ojson hist = ojson::array();
  for (double r : sol.convergence.residual_history) hist.push_back(number(r));
  j["residual_history"] = hist;
  j["sphere_relative_rms"] = fit.plane_fallback ? ojson(0.0) : number(fit.relative_rms);
  j["sphere_plane_fallback"] = fit.plane_fallback;
  const auto exact = exact_cap_field(c.rectangle, g);
  j["exact_cap_max_error"] = exact ? number(gauge_aligned_max_error(sol.u, *exact)) : ojson(nullptr);

  RunResult out;
  out.artifacts = {{"field.csv", graph_csv(sol.u)},
                   {"field.obj", write_obj(mesh)},
                   {"report.json", dump(j)}};
  out.summary = "solved " + std::to_string(g.nx) + "x" + std::to_string(g.ny) + " grid in " +
                std::to_string(sol.convergence.iterations) + " Newton steps";
  return out;
}

RunResult run_evolve(const ScenarioConfig& c) {
  SeedOptions so;
  so.h = c.h;
  so.perturbation = c.perturbation;
  so.seed = c.seed;
  const TriMeshDrop seed = seed_mesh(*c.support, c.target_volume, c.refinement, so);
  const EvolveResult res = evolve(seed, c.evolve);
  const DiagnosticsReport diag = diagnose(res.drop);
  const EnergyBreakdown e = energy(res.drop, c.evolve.mode);

  ojson j;
  j["kind"] = "evolve";
  j["seed"] = c.seed;
  j["status"] = to_string(res.report.status);
  j["iterations"] = res.report.iterations;
  j["grad_norm"] = number(res.report.grad_norm);
  j["energy"] = number(e.energy);
  j["area"] = number(e.free_area);
  j["volume"] = number(e.volume);
  j["target_volume"] = number(res.drop.target_volume);
  j["lagrange_h"] = number(res.drop.lagrange_h);
  j["vertices"] = res.drop.surface.vertices.size();
  j["triangles"] = res.drop.surface.triangles.size();

  RunResult out;
  out.artifacts = {{"initial.obj", write_obj(seed)},
                   {"final.obj", write_obj(res.drop)},
                   {"trace.csv", trace_csv(res.report)},
                   {"diagnostics.json", to_json(diag, c.seed)},
                   {"diagnostics.csv", to_csv(diag, c.seed)},
                   {"report.json", dump(j)}};
  out.exit_code = res.report.status == EvolveStatus::Converged ? 0 : 1;
  out.summary = std::string(to_string(res.report.status)) + " after " +
                std::to_string(res.report.iterations) + " iterations, gradient " +
                format_double(res.report.grad_norm);
  return out;
}

RunResult run_verify(const ScenarioConfig& c) {
  const std::vector<VerifyOutcome> outcomes = verify_suite(c.suite, c.seed);
  RunResult out;
  out.artifacts = {{"verify.json", to_json(outcomes, c.suite, c.seed)}};
  int passed = 0, total = 0;
  for (const auto& o : outcomes) {
    for (const auto& cr : o.criteria) {
      ++total;
      if (cr.pass()) ++passed;
    }
  }
  out.exit_code = passed == total ? 0 : 1;
  out.summary = c.suite + ": " + std::to_string(passed) + "/" + std::to_string(total) +
                " criteria pass";
  return out;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& c) {
  switch (c.kind) {
    case ScenarioKind::Classify: return run_classify(c);
    case ScenarioKind::WedgeCap:
    case ScenarioKind::TrihedralCap:
    case ScenarioKind::CylinderCap: return run_cap(c);
    case ScenarioKind::RectanglePDE: return run_rectangle(c);
    case ScenarioKind::Evolve: return run_evolve(c);
    case ScenarioKind::Verify: return run_verify(c);
  }
  throw DomainError("unknown scenario kind");
}

}  // namespace capvertex
