#pragma once

// Labeled port graphs: component types, instances, feasible designs and their
// binary chromosome encoding.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace topogen {

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DesignSpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense index of a design in the feasible set F.
using DesignId = std::uint32_t;

/// Fixed-length packed bit vector.
class Chromosome {
 public:
  Chromosome() = default;
  explicit Chromosome(std::size_t bits);

  std::size_t size() const noexcept { return bits_; }
  bool test(std::size_t i) const;
  void set(std::size_t i, bool value = true);
  std::size_t count() const noexcept;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  /// Bits as 0.0/1.0, appended to `out`.
  void append_to(std::vector<double>& out) const;
  std::string to_string() const;
  static Chromosome from_string(std::string_view bits);

  friend bool operator==(const Chromosome&, const Chromosome&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

struct ChromosomeHash {
  std::size_t operator()(const Chromosome& c) const noexcept;
};

/// Number of differing bit positions. Throws std::invalid_argument on length mismatch.
std::size_t hamming(const Chromosome& a, const Chromosome& b);

struct ComponentType {
  std::string name;
  std::vector<std::string> input_ports;
  std::vector<std::string> output_ports;
};

struct ComponentInstance {
  std::string id;
  std::size_t type = 0;  // index into DesignSpace::types()
};

/// A port of a concrete instance; `port` indexes the type's input or output list.
struct PortRef {
  std::size_t instance = 0;
  std::size_t port = 0;
  friend bool operator==(const PortRef&, const PortRef&) = default;
};

/// Connection from output port `output` (index into O) to input port `input` (index into I).
struct Edge {
  std::uint32_t output = 0;
  std::uint32_t input = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// A topology: included instances (indices into M) and port connections.
/// Canonical form keeps both lists sorted and unique.
struct Design {
  std::vector<std::uint32_t> nodes;
  std::vector<Edge> edges;

  void canonicalize();
  friend bool operator==(const Design&, const Design&) = default;
};

/// Immutable after construction: the sets M, O, I and the enumerated feasible designs F.
/// Ordering of instances and ports follows input order and fixes the chromosome layout.
class DesignSpace {
 public:
  DesignSpace(std::vector<ComponentType> types, std::vector<ComponentInstance> instances,
              std::vector<Design> designs);

  const std::vector<ComponentType>& types() const noexcept { return types_; }
  const std::vector<ComponentInstance>& instances() const noexcept { return instances_; }
  const std::vector<PortRef>& output_ports() const noexcept { return outputs_; }
  const std::vector<PortRef>& input_ports() const noexcept { return inputs_; }

  std::size_t size() const noexcept { return designs_.size(); }
  const Design& design(DesignId id) const { return designs_.at(id); }
  const Chromosome& chromosome(DesignId id) const { return chromosomes_.at(id); }

  /// |M| + |O|·|I|
  std::size_t chromosome_length() const noexcept;

  std::optional<DesignId> find(const Chromosome& c) const;
  std::optional<std::size_t> instance_index(std::string_view id) const;
  /// Index into O (resp. I) of the named port, if it exists.
  std::optional<std::uint32_t> output_index(std::string_view instance, std::string_view port) const;
  std::optional<std::uint32_t> input_index(std::string_view instance, std::string_view port) const;

  std::string port_name(const PortRef& p, bool output) const;

 private:
  std::vector<ComponentType> types_;
  std::vector<ComponentInstance> instances_;
  std::vector<PortRef> outputs_;
  std::vector<PortRef> inputs_;
  std::vector<std::uint32_t> first_output_;  // per instance, offset into outputs_
  std::vector<std::uint32_t> first_input_;
  std::vector<Design> designs_;
  std::vector<Chromosome> chromosomes_;
  std::unordered_map<Chromosome, DesignId, ChromosomeHash> lookup_;
};

Chromosome encode(const Design& design, const DesignSpace& space);
Design decode(const Chromosome& chromosome, const DesignSpace& space);

/// Parses the JSON design-space format. Errors carry a JSON-pointer-like location.
DesignSpace parse_design_space(std::string_view json_text);
DesignSpace load_design_space(const std::filesystem::path& path);
std::string design_space_to_json(const DesignSpace& space);

}  // namespace topogen
