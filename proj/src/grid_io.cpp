#include "pmufdl/grid_io.hpp"

#include <fstream>
#include <sstream>

namespace pmufdl {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ModelError(where + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    fail(where, std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  return v.get<double>();
}

Complex complexValue(const json& v, const std::string& where) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (!v.is_array() || v.size() != 2) fail(where, "expected [re, im]");
  return {number(v[0], where), number(v[1], where)};
}

Matrix3c matrix3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) fail(where, "expected 3x3 matrix");
  Matrix3c m;
  for (int r = 0; r < 3; ++r) {
    if (!v[r].is_array() || v[r].size() != 3) fail(where, "expected 3x3 matrix");
    for (int c = 0; c < 3; ++c) {
      m(r, c) = complexValue(v[r][c], where + "[" + std::to_string(r) + "][" +
                                          std::to_string(c) + "]");
    }
  }
  return m;
}

Vector3c vector3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) fail(where, "expected 3 phasors");
  Vector3c out;
  for (int p = 0; p < 3; ++p) out(p) = complexValue(v[p], where);
  return out;
}

json toJson(Complex c) { return json::array({c.real(), c.imag()}); }

json toJson(const Matrix3c& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 3; ++c) row.push_back(toJson(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

Grounding parseGrounding(const json& g, const std::string& where) {
  Grounding out;
  const std::string kind = field(g, "kind", where).get<std::string>();
  if (kind == "none") return out;
  if (kind == "solid") {
    out.kind = GroundingKind::kSolid;
  } else if (kind == "petersen") {
    out.kind = GroundingKind::kPetersen;
    out.inductance = number(field(g, "inductance", where), where + ".inductance");
    if (g.contains("resistance")) {
      out.resistance = number(g.at("resistance"), where + ".resistance");
    }
    if (!(out.inductance > 0.0)) fail(where, "Petersen inductance must be > 0");
  } else {
    fail(where, "unknown grounding kind '" + kind + "'");
  }
  out.z0 = g.contains("z0") ? complexValue(g.at("z0"), where + ".z0")
                            : Complex{0.0, 0.0};
  return out;
}

}  // namespace

GridModel parseGrid(const json& doc) {
  if (!doc.is_object()) fail("grid", "top level must be an object");
  const double frequency = number(field(doc, "FREQUENCY", "grid"), "FREQUENCY");

  std::vector<Node> nodes;
  const json& jn = field(doc, "NODES", "grid");
  if (!jn.is_array()) fail("NODES", "expected an array");
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string where = "NODES[" + std::to_string(i) + "]";
    const json& e = jn[i];
    Node n;
    n.id = field(e, "id", where).get<NodeId>();
    n.name = e.value("name", "");
    n.monitored = e.value("monitored", false);
    if (e.contains("grounding")) {
      n.grounding = parseGrounding(e.at("grounding"), where + ".grounding");
    }
    nodes.push_back(n);
  }

  std::vector<Branch> branches;
  const json& jb = field(doc, "BRANCHES", "grid");
  if (!jb.is_array()) fail("BRANCHES", "expected an array");
  for (std::size_t i = 0; i < jb.size(); ++i) {
    const std::string where = "BRANCHES[" + std::to_string(i) + "]";
    const json& e = jb[i];
    Branch b;
    b.id = field(e, "id", where).get<BranchId>();
    b.from = field(e, "from", where).get<NodeId>();
    b.to = field(e, "to", where).get<NodeId>();
    b.series_impedance = matrix3(field(e, "impedance", where), where + ".impedance");
    if (e.contains("shunt")) {
      b.shunt_from = matrix3(e.at("shunt"), where + ".shunt");
      b.shunt_to = b.shunt_from;
    }
    const std::string kind = e.value("kind", "line");
    if (kind == "line") {
      b.kind = BranchKind::kLine;
    } else if (kind == "transformer") {
      b.kind = BranchKind::kTransformer;
    } else {
      fail(where, "unknown branch kind '" + kind + "'");
    }
    b.eligible = e.value("eligible", b.kind == BranchKind::kLine);
    branches.push_back(b);
  }

  std::vector<Source> sources;
  if (doc.contains("SOURCES")) {
    const json& js = doc.at("SOURCES");
    for (std::size_t i = 0; i < js.size(); ++i) {
      const std::string where = "SOURCES[" + std::to_string(i) + "]";
      const json& e = js[i];
      Source s;
      s.node = field(e, "node", where).get<NodeId>();
      s.emf = vector3(field(e, "emf", where), where + ".emf");
      s.impedance = matrix3(field(e, "impedance", where), where + ".impedance");
      const std::string neutral = e.value("neutral", "isolated");
      if (neutral != "isolated" && neutral != "grounded") {
        fail(where, "neutral must be 'isolated' or 'grounded'");
      }
      s.grounded_neutral = neutral == "grounded";
      sources.push_back(s);
    }
  }

  std::vector<Load> loads;
  if (doc.contains("LOADS")) {
    const json& jl = doc.at("LOADS");
    for (std::size_t i = 0; i < jl.size(); ++i) {
      const std::string where = "LOADS[" + std::to_string(i) + "]";
      const json& e = jl[i];
      Load l;
      l.node = field(e, "node", where).get<NodeId>();
      l.delta_impedance = matrix3(field(e, "impedance", where), where + ".impedance");
      loads.push_back(l);
    }
  }

  const double nominal = doc.value("NOMINAL_VOLTAGE", 0.0);
  return GridModel(std::move(nodes), std::move(branches), std::move(sources),
                   std::move(loads), frequency, nominal);
}

GridModel parseGridText(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ModelError("line " + std::to_string(line) + ": " + e.what());
  }
  try {
    return parseGrid(doc);
  } catch (const json::exception& e) {
    throw ModelError(std::string("grid: ") + e.what());
  }
}

GridModel loadGrid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open grid file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parseGridText(ss.str());
  } catch (const ModelError& e) {
    throw ModelError(path.string() + ": " + e.what());
  }
}

json gridToJson(const GridModel& grid) {
  json doc;
  doc["FREQUENCY"] = grid.frequency();
  doc["NOMINAL_VOLTAGE"] = grid.nominalVoltage();
  json nodes = json::array();
  for (const Node& n : grid.nodes()) {
    json e{{"id", n.id}, {"name", n.name}, {"monitored", n.monitored}};
    const Grounding& g = n.grounding;
    if (g.kind == GroundingKind::kSolid) {
      e["grounding"] = {{"kind", "solid"}, {"z0", toJson(g.z0)}};
    } else if (g.kind == GroundingKind::kPetersen) {
      e["grounding"] = {{"kind", "petersen"},
                        {"inductance", g.inductance},
                        {"resistance", g.resistance},
                        {"z0", toJson(g.z0)}};
    }
    nodes.push_back(e);
  }
  doc["NODES"] = nodes;
  json branches = json::array();
  for (const Branch& b : grid.branches()) {
    branches.push_back({{"id", b.id},
                        {"from", b.from},
                        {"to", b.to},
                        {"impedance", toJson(b.series_impedance)},
                        {"shunt", toJson(b.shunt_from)},
                        {"kind", b.kind == BranchKind::kLine ? "line" : "transformer"},
                        {"eligible", b.eligible}});
  }
  doc["BRANCHES"] = branches;
  json sources = json::array();
  for (const Source& s : grid.sources()) {
    json emf = json::array();
    for (int p = 0; p < 3; ++p) emf.push_back(toJson(s.emf(p)));
    sources.push_back({{"node", s.node},
                       {"emf", emf},
                       {"impedance", toJson(s.impedance)},
                       {"neutral", s.grounded_neutral ? "grounded" : "isolated"}});
  }
  doc["SOURCES"] = sources;
  json loads = json::array();
  for (const Load& l : grid.loads()) {
    loads.push_back({{"node", l.node}, {"impedance", toJson(l.delta_impedance)}});
  }
  doc["LOADS"] = loads;
  return doc;
}

void saveGrid(const GridModel& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot write " + path.string());
  out << gridToJson(grid).dump(1) << '\n';
}

}  // namespace pmufdl
