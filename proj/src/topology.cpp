#include "topogen/topology.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace topogen {

namespace {

constexpr std::size_t kWordBits = 64;

std::size_t word_count(std::size_t bits) { return (bits + kWordBits - 1) / kWordBits; }

}  // namespace

Chromosome::Chromosome(std::size_t bits) : bits_(bits), words_(word_count(bits), 0) {}

bool Chromosome::test(std::size_t i) const {
  if (i >= bits_) throw std::out_of_range("chromosome bit index out of range");
  return (words_[i / kWordBits] >> (i % kWordBits)) & 1U;
}

void Chromosome::set(std::size_t i, bool value) {
  if (i >= bits_) throw std::out_of_range("chromosome bit index out of range");
  const std::uint64_t mask = std::uint64_t{1} << (i % kWordBits);
  if (value)
    words_[i / kWordBits] |= mask;
  else
    words_[i / kWordBits] &= ~mask;
}

std::size_t Chromosome::count() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

void Chromosome::append_to(std::vector<double>& out) const {
  out.reserve(out.size() + bits_);
  for (std::size_t i = 0; i < bits_; ++i)
    out.push_back(static_cast<double>((words_[i / kWordBits] >> (i % kWordBits)) & 1U));
}

std::string Chromosome::to_string() const {
  std::string s(bits_, '0');
  for (std::size_t i = 0; i < bits_; ++i)
    if (test(i)) s[i] = '1';
  return s;
}

Chromosome Chromosome::from_string(std::string_view bits) {
  Chromosome c(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1')
      c.set(i);
    else if (bits[i] != '0')
      throw std::invalid_argument("chromosome string may only contain '0' and '1'");
  }
  return c;
}

std::size_t ChromosomeHash::operator()(const Chromosome& c) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ c.size();
  for (auto w : c.words()) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

std::size_t hamming(const Chromosome& a, const Chromosome& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("hamming: chromosome lengths differ (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t d = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  return d;
}

void Design::canonicalize() {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

DesignSpace::DesignSpace(std::vector<ComponentType> types, std::vector<ComponentInstance> instances,
                         std::vector<Design> designs)
    : types_(std::move(types)), instances_(std::move(instances)), designs_(std::move(designs)) {
  for (std::size_t t = 0; t < types_.size(); ++t) {
    const auto& ct = types_[t];
    if (ct.input_ports.empty() && ct.output_ports.empty())
      throw DesignSpaceError("component type '" + ct.name + "' has no ports");
    std::unordered_set<std::string> names;
    for (const auto* list : {&ct.input_ports, &ct.output_ports})
      for (const auto& p : *list)
        if (!names.insert(p).second)
          throw DesignSpaceError("component type '" + ct.name + "' repeats port name '" + p + "'");
  }

  std::unordered_set<std::string> ids;
  first_output_.reserve(instances_.size());
  first_input_.reserve(instances_.size());
  for (std::size_t m = 0; m < instances_.size(); ++m) {
    const auto& inst = instances_[m];
    if (!ids.insert(inst.id).second) throw DesignSpaceError("duplicate instance id '" + inst.id + "'");
    if (inst.type >= types_.size())
      throw DesignSpaceError("instance '" + inst.id + "' references an unknown component type");
    const auto& ct = types_[inst.type];
    first_output_.push_back(static_cast<std::uint32_t>(outputs_.size()));
    first_input_.push_back(static_cast<std::uint32_t>(inputs_.size()));
    for (std::size_t p = 0; p < ct.output_ports.size(); ++p) outputs_.push_back({m, p});
    for (std::size_t p = 0; p < ct.input_ports.size(); ++p) inputs_.push_back({m, p});
  }

  chromosomes_.reserve(designs_.size());
  lookup_.reserve(designs_.size());
  for (std::size_t d = 0; d < designs_.size(); ++d) {
    designs_[d].canonicalize();
    Chromosome c;
    try {
      c = encode(designs_[d], *this);
    } catch (const EncodingError& e) {
      throw DesignSpaceError("design " + std::to_string(d) + ": " + e.what());
    }
    auto [it, fresh] = lookup_.emplace(c, static_cast<DesignId>(d));
    if (!fresh)
      throw DesignSpaceError("design " + std::to_string(d) + " duplicates design " +
                             std::to_string(it->second));
    chromosomes_.push_back(std::move(c));
  }
}

std::size_t DesignSpace::chromosome_length() const noexcept {
  return instances_.size() + outputs_.size() * inputs_.size();
}

std::optional<DesignId> DesignSpace::find(const Chromosome& c) const {
  auto it = lookup_.find(c);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> DesignSpace::instance_index(std::string_view id) const {
  for (std::size_t m = 0; m < instances_.size(); ++m)
    if (instances_[m].id == id) return m;
  return std::nullopt;
}

std::optional<std::uint32_t> DesignSpace::output_index(std::string_view instance,
                                                       std::string_view port) const {
  auto m = instance_index(instance);
  if (!m) return std::nullopt;
  const auto& ports = types_[instances_[*m].type].output_ports;
  for (std::size_t p = 0; p < ports.size(); ++p)
    if (ports[p] == port) return first_output_[*m] + static_cast<std::uint32_t>(p);
  return std::nullopt;
}

std::optional<std::uint32_t> DesignSpace::input_index(std::string_view instance,
                                                      std::string_view port) const {
  auto m = instance_index(instance);
  if (!m) return std::nullopt;
  const auto& ports = types_[instances_[*m].type].input_ports;
  for (std::size_t p = 0; p < ports.size(); ++p)
    if (ports[p] == port) return first_input_[*m] + static_cast<std::uint32_t>(p);
  return std::nullopt;
}

std::string DesignSpace::port_name(const PortRef& p, bool output) const {
  const auto& inst = instances_.at(p.instance);
  const auto& ct = types_[inst.type];
  return inst.id + "." + (output ? ct.output_ports.at(p.port) : ct.input_ports.at(p.port));
}

Chromosome encode(const Design& design, const DesignSpace& space) {
  const std::size_t n_nodes = space.instances().size();
  const std::size_t n_out = space.output_ports().size();
  const std::size_t n_in = space.input_ports().size();
  Chromosome c(space.chromosome_length());
  for (auto m : design.nodes) {
    if (m >= n_nodes) throw EncodingError("unknown instance index " + std::to_string(m));
    c.set(m);
  }
  for (const auto& e : design.edges) {
    if (e.output >= n_out) throw EncodingError("unknown output port index " + std::to_string(e.output));
    if (e.input >= n_in) throw EncodingError("unknown input port index " + std::to_string(e.input));
    const auto src = space.output_ports()[e.output].instance;
    const auto dst = space.input_ports()[e.input].instance;
    if (!c.test(src) || !c.test(dst))
      throw EncodingError("edge " + space.port_name(space.output_ports()[e.output], true) + " -> " +
                          space.port_name(space.input_ports()[e.input], false) +
                          " touches an instance that is not part of the design");
    c.set(n_nodes + static_cast<std::size_t>(e.output) * n_in + e.input);
  }
  return c;
}

Design decode(const Chromosome& chromosome, const DesignSpace& space) {
  if (chromosome.size() != space.chromosome_length())
    throw DecodeError("chromosome length " + std::to_string(chromosome.size()) + " does not match " +
                      std::to_string(space.chromosome_length()));
  const std::size_t n_nodes = space.instances().size();
  const std::size_t n_in = space.input_ports().size();
  Design d;
  for (std::size_t m = 0; m < n_nodes; ++m)
    if (chromosome.test(m)) d.nodes.push_back(static_cast<std::uint32_t>(m));
  for (std::size_t o = 0; o < space.output_ports().size(); ++o) {
    for (std::size_t i = 0; i < n_in; ++i) {
      if (!chromosome.test(n_nodes + o * n_in + i)) continue;
      const auto src = space.output_ports()[o].instance;
      const auto dst = space.input_ports()[i].instance;
      if (!chromosome.test(src) || !chromosome.test(dst))
        throw DecodeError("connection bit " + space.port_name(space.output_ports()[o], true) + " -> " +
                          space.port_name(space.input_ports()[i], false) +
                          " is set but an endpoint node bit is 0");
      d.edges.push_back({static_cast<std::uint32_t>(o), static_cast<std::uint32_t>(i)});
    }
  }
  return d;
}

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw DesignSpaceError(where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) parse_fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::vector<std::string> string_list(const json& arr, const std::string& where) {
  if (!arr.is_array()) parse_fail(where, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) parse_fail(where + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

}  // namespace

DesignSpace parse_design_space(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw DesignSpaceError(std::string("malformed JSON: ") + e.what());
  }

  std::vector<ComponentType> types;
  std::unordered_map<std::string, std::size_t> type_index;
  const auto& jtypes = require(doc, "component_types", "$");
  if (!jtypes.is_array()) parse_fail("$.component_types", "expected an array");
  for (std::size_t t = 0; t < jtypes.size(); ++t) {
    const std::string where = "$.component_types[" + std::to_string(t) + "]";
    const auto& jt = jtypes[t];
    const auto& name = require(jt, "name", where);
    if (!name.is_string()) parse_fail(where + ".name", "expected a string");
    ComponentType ct;
    ct.name = name.get<std::string>();
    ct.input_ports = jt.contains("input_ports") ? string_list(jt["input_ports"], where + ".input_ports")
                                                 : std::vector<std::string>{};
    ct.output_ports = jt.contains("output_ports")
                          ? string_list(jt["output_ports"], where + ".output_ports")
                          : std::vector<std::string>{};
    if (!type_index.emplace(ct.name, types.size()).second)
      parse_fail(where, "duplicate component type '" + ct.name + "'");
    types.push_back(std::move(ct));
  }

  std::vector<ComponentInstance> instances;
  std::unordered_set<std::string> instance_ids;
  const auto& jinst = require(doc, "instances", "$");
  if (!jinst.is_array()) parse_fail("$.instances", "expected an array");
  for (std::size_t m = 0; m < jinst.size(); ++m) {
    const std::string where = "$.instances[" + std::to_string(m) + "]";
    const auto& id = require(jinst[m], "id", where);
    const auto& type = require(jinst[m], "type", where);
    if (!id.is_string() || !type.is_string()) parse_fail(where, "'id' and 'type' must be strings");
    auto it = type_index.find(type.get<std::string>());
    if (it == type_index.end()) parse_fail(where + ".type", "unknown component type '" + type.get<std::string>() + "'");
    if (!instance_ids.insert(id.get<std::string>()).second)
      parse_fail(where + ".id", "duplicate instance id '" + id.get<std::string>() + "'");
    instances.push_back({id.get<std::string>(), it->second});
  }

  // Port lookups need the instance table; a space with no designs gives us that.
  DesignSpace shape(types, instances, {});

  std::vector<Design> designs;
  const auto& jdesigns = require(doc, "designs", "$");
  if (!jdesigns.is_array()) parse_fail("$.designs", "expected an array");
  designs.reserve(jdesigns.size());
  for (std::size_t d = 0; d < jdesigns.size(); ++d) {
    const std::string where = "$.designs[" + std::to_string(d) + "]";
    Design design;
    const auto nodes = string_list(require(jdesigns[d], "nodes", where), where + ".nodes");
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      auto m = shape.instance_index(nodes[k]);
      if (!m) parse_fail(where + ".nodes[" + std::to_string(k) + "]", "unknown instance '" + nodes[k] + "'");
      design.nodes.push_back(static_cast<std::uint32_t>(*m));
    }
    const auto& jedges = require(jdesigns[d], "edges", where);
    if (!jedges.is_array()) parse_fail(where + ".edges", "expected an array");
    for (std::size_t k = 0; k < jedges.size(); ++k) {
      const std::string ew = where + ".edges[" + std::to_string(k) + "]";
      const auto parts = string_list(jedges[k], ew);
      if (parts.size() != 4) parse_fail(ew, "expected [out_instance, out_port, in_instance, in_port]");
      auto o = shape.output_index(parts[0], parts[1]);
      if (!o) parse_fail(ew, "dangling output port '" + parts[0] + "." + parts[1] + "'");
      auto i = shape.input_index(parts[2], parts[3]);
      if (!i) parse_fail(ew, "dangling input port '" + parts[2] + "." + parts[3] + "'");
      if (std::find(nodes.begin(), nodes.end(), parts[0]) == nodes.end() ||
          std::find(nodes.begin(), nodes.end(), parts[2]) == nodes.end())
        parse_fail(ew, "edge endpoint is not among the design's nodes");
      design.edges.push_back({*o, *i});
    }
    designs.push_back(std::move(design));
  }
  return DesignSpace(std::move(types), std::move(instances), std::move(designs));
}

DesignSpace load_design_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DesignSpaceError("cannot open design-space file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_design_space(buf.str());
  } catch (const DesignSpaceError& e) {
    throw DesignSpaceError(path.string() + ": " + e.what());
  }
}

std::string design_space_to_json(const DesignSpace& space) {
  json doc;
  doc["component_types"] = json::array();
  for (const auto& t : space.types())
    doc["component_types"].push_back(
        {{"name", t.name}, {"input_ports", t.input_ports}, {"output_ports", t.output_ports}});
  doc["instances"] = json::array();
  for (const auto& m : space.instances())
    doc["instances"].push_back({{"id", m.id}, {"type", space.types()[m.type].name}});
  doc["designs"] = json::array();
  const auto port_parts = [&](const PortRef& p, bool output) {
    const auto& inst = space.instances()[p.instance];
    const auto& ct = space.types()[inst.type];
    return std::pair{inst.id, output ? ct.output_ports[p.port] : ct.input_ports[p.port]};
  };
  for (DesignId d = 0; d < space.size(); ++d) {
    const auto& design = space.design(d);
    json nodes = json::array();
    for (auto m : design.nodes) nodes.push_back(space.instances()[m].id);
    json edges = json::array();
    for (const auto& e : design.edges) {
      auto [oi, op] = port_parts(space.output_ports()[e.output], true);
      auto [ii, ip] = port_parts(space.input_ports()[e.input], false);
      edges.push_back({oi, op, ii, ip});
    }
    doc["designs"].push_back({{"nodes", nodes}, {"edges", edges}});
  }
  return doc.dump(1);
}

}  // namespace topogen
