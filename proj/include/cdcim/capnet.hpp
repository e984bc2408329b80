// Copyright 2026 The cdcim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Capacitor networks: topology, charge redistribution, mismatch and INL.
//
// A network is a graph of nodes joined by capacitors and phase-controlled
// switches. Nodes are either driven (held at a given voltage) or floating
// (their voltage follows from charge conservation). Closing a switch merges
// its two nodes for the duration of a phase.
//
// All voltages are normalized (dimensionless); capacitances are in units of
// the unit capacitor C.

#include "cdcim/common.hpp"
#include "cdcim/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cdcim {

using NodeId = std::size_t;

enum class NodeRole : std::uint8_t { driven, floating };

/// Switch groups. Phase p_k closes exactly the switches of group s_k.
enum class SwitchGroup : std::uint8_t { s1, s2, s3 };
enum class Phase : std::uint8_t { p1, p2, p3 };

constexpr bool is_closed(SwitchGroup g, Phase p) { return static_cast<int>(g) == static_cast<int>(p); }

inline std::string to_string(SwitchGroup g) { return "S" + std::to_string(static_cast<int>(g) + 1); }
inline std::string to_string(Phase p) { return "P" + std::to_string(static_cast<int>(p) + 1); }

struct Node {
  std::string name;
  NodeRole role = NodeRole::floating;
};

struct Capacitor {
  std::string id;
  double nominal = 1.0;  // in units of C
  double epsilon = 0.0;  // relative mismatch
  NodeId a = 0;
  NodeId b = 0;

  double value() const { return nominal * (1.0 + epsilon); }

  template <AnalogScalar Scalar>
  Scalar value_as() const {
    if constexpr (std::is_same_v<Scalar, double>) {
      return value();
    } else {
      return from_double<Rational>(nominal) * (Rational(1) + from_double<Rational>(epsilon));
    }
  }
};

struct SwitchElement {
  SwitchGroup group = SwitchGroup::s1;
  NodeId a = 0;
  NodeId b = 0;
};

/// An input of the network. One input may drive several nodes (a split MSB
/// column feeds two source lines).
struct Port {
  std::string name;
  std::vector<NodeId> nodes;
};

class CapNetwork {
public:
  NodeId add_node(std::string name, NodeRole role) {
    if (index_.contains(name)) throw ConstructionError("duplicate node name '" + name + "'");
    index_.emplace(name, nodes_.size());
    nodes_.push_back(Node{std::move(name), role});
    return nodes_.size() - 1;
  }

  void add_capacitor(std::string id, double nominal, NodeId a, NodeId b, double epsilon = 0.0) {
    check_node(a);
    check_node(b);
    if (!(nominal > 0.0) || !std::isfinite(nominal)) {
      throw ConstructionError("capacitor '" + id + "' needs a positive nominal value");
    }
    if (!(nominal * (1.0 + epsilon) > 0.0)) {
      throw ConstructionError("capacitor '" + id + "' has a non-positive effective value");
    }
    if (a == b) throw ConstructionError("capacitor '" + id + "' shorts a node to itself");
    caps_.push_back(Capacitor{std::move(id), nominal, epsilon, a, b});
  }

  void add_switch(SwitchGroup g, NodeId a, NodeId b) {
    check_node(a);
    check_node(b);
    switches_.push_back(SwitchElement{g, a, b});
  }

  std::size_t add_port(std::string name, std::vector<NodeId> nodes) {
    if (nodes.empty()) throw ConstructionError("port '" + name + "' drives no node");
    for (auto n : nodes) {
      check_node(n);
      if (nodes_[n].role != NodeRole::driven) {
        throw ConstructionError("port '" + name + "' must drive driven nodes only");
      }
    }
    ports_.push_back(Port{std::move(name), std::move(nodes)});
    return ports_.size() - 1;
  }

  void set_output(NodeId n) {
    check_node(n);
    output_ = n;
  }
  void set_ground(NodeId n) {
    check_node(n);
    if (nodes_[n].role != NodeRole::driven) throw ConstructionError("ground must be a driven node");
    ground_ = n;
  }
  void set_eval_phase(Phase p) { eval_phase_ = p; }

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Capacitor> capacitors() const { return caps_; }
  std::span<Capacitor> capacitors() { return caps_; }
  std::span<const SwitchElement> switches() const { return switches_; }
  std::span<const Port> ports() const { return ports_; }
  std::optional<NodeId> output() const { return output_; }
  std::optional<NodeId> ground() const { return ground_; }
  Phase eval_phase() const { return eval_phase_; }

  std::optional<NodeId> find_node(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NodeId node(const std::string& name) const {
    auto n = find_node(name);
    if (!n) throw IndexError("no node named '" + name + "'");
    return *n;
  }

  /// Sum of nominal capacitances (the area accounting figure).
  double total_capacitance() const {
    double total = 0.0;
    for (const auto& c : caps_) total += c.nominal;
    return total;
  }

  /// Nominal capacitance hanging on a node.
  double node_load(NodeId n) const {
    check_node(n);
    double load = 0.0;
    for (const auto& c : caps_)
      if (c.a == n || c.b == n) load += c.nominal;
    return load;
  }

  bool mismatch_free() const {
    return std::all_of(caps_.begin(), caps_.end(), [](const Capacitor& c) { return c.epsilon == 0.0; });
  }

  CapNetwork without_mismatch() const {
    CapNetwork copy = *this;
    for (auto& c : copy.caps_) c.epsilon = 0.0;
    return copy;
  }

  /// Throws ConstructionError if some floating node, in some phase, has no
  /// capacitive or switched path to a driven node. Such an island makes the
  /// redistribution system singular.
  void validate() const {
    for (Phase p : {Phase::p1, Phase::p2, Phase::p3}) {
      std::vector<std::size_t> parent(nodes_.size());
      std::iota(parent.begin(), parent.end(), std::size_t{0});
      auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
      };
      auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };
      for (const auto& c : caps_) unite(c.a, c.b);
      for (const auto& s : switches_)
        if (is_closed(s.group, p)) unite(s.a, s.b);
      std::vector<bool> has_driven(nodes_.size(), false);
      for (std::size_t n = 0; n < nodes_.size(); ++n)
        if (nodes_[n].role == NodeRole::driven) has_driven[find(n)] = true;
      for (std::size_t n = 0; n < nodes_.size(); ++n) {
        if (nodes_[n].role == NodeRole::floating && !has_driven[find(n)]) {
          throw ConstructionError("floating node '" + nodes_[n].name + "' is isolated from every driven node in " +
                                  to_string(p));
        }
      }
    }
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
      if (nodes_[n].role != NodeRole::floating) continue;
      bool touched = std::any_of(caps_.begin(), caps_.end(),
                                 [n](const Capacitor& c) { return c.a == n || c.b == n; });
      if (!touched) throw ConstructionError("floating node '" + nodes_[n].name + "' has no capacitor");
    }
  }

private:
  void check_node(NodeId n) const {
    if (n >= nodes_.size()) throw IndexError("node id " + std::to_string(n) + " out of range");
  }

  std::vector<Node> nodes_;
  std::vector<Capacitor> caps_;
  std::vector<SwitchElement> switches_;
  std::vector<Port> ports_;
  std::map<std::string, NodeId> index_;
  std::optional<NodeId> output_;
  std::optional<NodeId> ground_;
  Phase eval_phase_ = Phase::p2;
};

// ---------------------------------------------------------------------------
// Charge redistribution
// ---------------------------------------------------------------------------

/// Nodal charge-conservation system of one network in one phase, factored
/// once and reusable for many drive patterns.
///
/// For every floating super-node f (nodes merged by closed switches):
///   sum_{caps at f} C * (V_f - V_other) = Q_f
/// where Q_f is the charge initially stored on f.
template <AnalogScalar Scalar>
class Redistribution {
public:
  Redistribution(const CapNetwork& net, Phase phase) : net_(&net), phase_(phase) {
    const auto nodes = net.nodes();
    const std::size_t n = nodes.size();
    group_.resize(n);
    floating_.resize(n);
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& s : net.switches())
      if (is_closed(s.group, phase)) parent[find(s.a)] = find(s.b);

    // A super-node is driven when any member is driven.
    std::vector<bool> root_driven(n, false);
    for (std::size_t i = 0; i < n; ++i)
      if (nodes[i].role == NodeRole::driven) root_driven[find(i)] = true;

    std::map<std::size_t, std::size_t> floating_index;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = find(i);
      if (!root_driven[r]) {
        auto [it, inserted] = floating_index.emplace(r, floating_index.size());
        group_[i] = it->second;
        floating_[i] = true;
      } else {
        floating_[i] = false;
        group_[i] = r;  // representative node for driven super-nodes
      }
    }
    n_floating_ = floating_index.size();

    DenseMatrix<Scalar> a(n_floating_, n_floating_);
    for (const auto& c : net.capacitors()) {
      const Scalar cv = c.template value_as<Scalar>();
      const bool fa = floating_[c.a];
      const bool fb = floating_[c.b];
      if (fa && fb && group_[c.a] == group_[c.b]) continue;
      if (!fa && !fb) continue;
      if (fa) a(group_[c.a], group_[c.a]) += cv;
      if (fb) a(group_[c.b], group_[c.b]) += cv;
      if (fa && fb) {
        a(group_[c.a], group_[c.b]) -= cv;
        a(group_[c.b], group_[c.a]) -= cv;
      }
    }
    if (n_floating_ > 0) lu_.emplace(std::move(a));
  }

  std::size_t floating_groups() const { return n_floating_; }

  /// `drive[i]` is read for driven nodes only; `charge[i]` for floating nodes
  /// only (charges of merged nodes add). Returns every node's voltage.
  std::vector<Scalar> solve(std::span<const Scalar> drive, std::span<const Scalar> charge = {}) const {
    const auto nodes = net_->nodes();
    const std::size_t n = nodes.size();
    if (drive.size() != n) throw InputError("drive vector must cover every node");
    if (!charge.empty() && charge.size() != n) throw InputError("charge vector must cover every node");

    // Voltage of each driven super-node; members must agree.
    std::map<std::size_t, Scalar> driven_v;
    for (std::size_t i = 0; i < n; ++i) {
      if (floating_[i] || nodes[i].role != NodeRole::driven) continue;
      auto [it, inserted] = driven_v.emplace(group_[i], drive[i]);
      if (!inserted && it->second != drive[i]) {
        throw SolverError("switch in " + to_string(phase_) + " shorts driven nodes held at different voltages");
      }
    }

    std::vector<Scalar> rhs(n_floating_, Scalar(0));
    if (!charge.empty())
      for (std::size_t i = 0; i < n; ++i)
        if (floating_[i]) rhs[group_[i]] += charge[i];
    for (const auto& c : net_->capacitors()) {
      const bool fa = floating_[c.a];
      const bool fb = floating_[c.b];
      if (fa == fb) continue;
      const Scalar cv = c.template value_as<Scalar>();
      if (fa) rhs[group_[c.a]] += cv * driven_v.at(group_[c.b]);
      else rhs[group_[c.b]] += cv * driven_v.at(group_[c.a]);
    }

    std::vector<Scalar> x;
    if (lu_) x = lu_->solve(rhs);
    if constexpr (std::is_same_v<Scalar, double>) check_residual(x, rhs);

    std::vector<Scalar> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = floating_[i] ? x[group_[i]] : driven_v.at(group_[i]);
    return v;
  }

  /// Net charge stored on the floating super-node containing `node`, for a
  /// given voltage solution: sum over its capacitors of C * (V_node - V_other).
  Scalar stored_charge(std::span<const Scalar> v, NodeId node) const {
    if (!floating_.at(node)) throw InputError("stored_charge is defined for floating nodes only");
    Scalar q(0);
    const std::size_t g = group_[node];
    for (const auto& c : net_->capacitors()) {
      const bool in_a = floating_[c.a] && group_[c.a] == g;
      const bool in_b = floating_[c.b] && group_[c.b] == g;
      if (in_a == in_b) continue;
      const Scalar cv = c.template value_as<Scalar>();
      q += in_a ? cv * (v[c.a] - v[c.b]) : cv * (v[c.b] - v[c.a]);
    }
    return q;
  }

private:
  void check_residual(const std::vector<double>& x, const std::vector<double>& rhs) const {
    // Recompute A x from the capacitor list.
    std::vector<double> ax(n_floating_, 0.0);
    double scale = 0.0;
    for (const auto& c : net_->capacitors()) {
      const bool fa = floating_[c.a];
      const bool fb = floating_[c.b];
      if (!fa && !fb) continue;
      if (fa && fb && group_[c.a] == group_[c.b]) continue;
      const double cv = c.value();
      scale = std::max(scale, cv);
      if (fa) ax[group_[c.a]] += cv * (x[group_[c.a]] - (fb ? x[group_[c.b]] : 0.0));
      if (fb) ax[group_[c.b]] += cv * (x[group_[c.b]] - (fa ? x[group_[c.a]] : 0.0));
    }
    for (std::size_t i = 0; i < n_floating_; ++i) {
      if (std::abs(ax[i] - rhs[i]) > kResidualTolerance * std::max(1.0, scale * 4.0)) {
        throw SolverError("charge-redistribution residual above tolerance");
      }
    }
  }

public:
  static constexpr double kResidualTolerance = 1e-12;

private:
  const CapNetwork* net_;
  Phase phase_;
  std::vector<std::size_t> group_;
  std::vector<bool> floating_;
  std::size_t n_floating_ = 0;
  std::optional<DenseLu<Scalar>> lu_;
};

/// Map-based convenience: every driven node must appear in `driven_voltages`.
template <AnalogScalar Scalar = double>
std::vector<Scalar> solve_redistribution(const CapNetwork& net, const std::map<NodeId, Scalar>& driven_voltages,
                                         const std::map<NodeId, Scalar>& initial_charges, Phase phase) {
  const auto nodes = net.nodes();
  std::vector<Scalar> drive(nodes.size(), Scalar(0));
  std::vector<Scalar> charge(nodes.size(), Scalar(0));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].role != NodeRole::driven) continue;
    auto it = driven_voltages.find(i);
    if (it == driven_voltages.end()) throw InputError("no voltage given for driven node '" + nodes[i].name + "'");
    drive[i] = it->second;
  }
  for (const auto& [node, q] : initial_charges) {
    if (node >= nodes.size()) throw IndexError("charge given for unknown node");
    if (nodes[node].role != NodeRole::floating) throw InputError("initial charge given for a driven node");
    charge[node] = q;
  }
  return Redistribution<Scalar>(net, phase).solve(drive, charge);
}

/// Realized summation coefficients: weight_p is the output voltage when port p
/// is driven to 1, every other driven node to 0, with no stored charge.
template <AnalogScalar Scalar = double>
std::vector<Scalar> effective_weights(const CapNetwork& net) {
  if (!net.output()) throw ConstructionError("network has no output node");
  if (net.ports().empty()) throw ConstructionError("network has no input ports");
  const Redistribution<Scalar> sys(net, net.eval_phase());
  const std::size_t n = net.nodes().size();
  std::vector<Scalar> weights;
  weights.reserve(net.ports().size());
  std::vector<Scalar> drive(n, Scalar(0));
  for (const auto& port : net.ports()) {
    std::fill(drive.begin(), drive.end(), Scalar(0));
    for (auto node : port.nodes) drive[node] = Scalar(1);
    weights.push_back(sys.solve(drive)[*net.output()]);
  }
  return weights;
}

// ---------------------------------------------------------------------------
// Topology builders
// ---------------------------------------------------------------------------

/// Hybrid binary / C-2C summation network.
///
/// Column c carries weight 1/2 (c = 0, 1) or 2^(c-2) (c >= 2). The top
/// `binary_high_bits` integer columns couple to the summing node through
/// binary-ratio capacitors; the remaining columns are attenuated by a C-2C
/// ladder (unit shunts, 2C bridges) whose first node is the summing node.
struct LeafConfig {
  std::size_t n_bits = 9;
  std::size_t binary_high_bits = 4;
  bool msb_split = true;
  double unit_c = 1.0;
  /// Per source-line load; unset means "largest weighting capacitor + 1 unit".
  std::optional<double> scl_load;

  static LeafConfig standard() {
    LeafConfig cfg;
    cfg.scl_load = 9.0;
    return cfg;
  }
};

namespace detail {

inline CapNetwork build_hybrid(const LeafConfig& cfg, SwitchGroup connect, const std::string& input_prefix) {
  if (cfg.n_bits == 0) throw ConstructionError("a summation network needs at least one column");
  if (cfg.binary_high_bits > cfg.n_bits) {
    throw ConstructionError("binary_high_bits (" + std::to_string(cfg.binary_high_bits) + ") exceeds n_bits (" +
                            std::to_string(cfg.n_bits) + ")");
  }
  if (!(cfg.unit_c > 0.0)) throw ConstructionError("unit capacitance must be positive");
  const double u = cfg.unit_c;
  const Phase eval = static_cast<Phase>(static_cast<int>(connect));

  CapNetwork net;
  const NodeId gnd = net.add_node("gnd", NodeRole::driven);
  net.set_ground(gnd);
  net.set_eval_phase(eval);

  auto col_name = [&](std::size_t c) { return input_prefix + "[" + std::to_string(c) + "]"; };

  if (cfg.n_bits == 1) {
    const NodeId out = net.add_node("out", NodeRole::floating);
    net.set_output(out);
    net.add_switch(SwitchGroup::s1, out, gnd);
    const NodeId in = net.add_node(col_name(0), NodeRole::driven);
    net.add_capacitor("Cw[0]", cfg.scl_load.value_or(u), in, out);
    net.add_port("col0", {in});
    return net;
  }

  const std::size_t n = cfg.n_bits;
  const std::size_t n_int = n - 2;
  const std::size_t binary = std::min(cfg.binary_high_bits, n_int);
  const std::size_t lower = n_int - binary;  // integer columns on the ladder
  const std::size_t lowest_binary = 2 + lower;
  if (cfg.msb_split && binary == 0) throw ConstructionError("msb_split needs at least one binary-weighted column");

  // Weighting capacitors attach to per-column top plates. The first plate
  // (MSB) is the summing node; the connect switch merges the others into it.
  // S1 resets every plate.
  std::optional<NodeId> out;
  auto top_plate = [&](const std::string& name) {
    const NodeId t = net.add_node(out ? name : "out", NodeRole::floating);
    if (out) {
      net.add_switch(connect, t, *out);
    } else {
      out = t;
      net.set_output(t);
    }
    net.add_switch(SwitchGroup::s1, t, gnd);
    return t;
  };

  std::vector<std::vector<NodeId>> col_nodes(n);

  // Binary section, MSB first.
  for (std::size_t c = n; c-- > lowest_binary;) {
    const double cap = 2.0 * u * static_cast<double>(std::uint64_t{1} << (c - lowest_binary));
    if (c == n - 1 && cfg.msb_split) {
      for (const char* half : {"a", "b"}) {
        const NodeId in = net.add_node(col_name(c) + half, NodeRole::driven);
        const NodeId t = top_plate("top[" + std::to_string(c) + "]" + half);
        net.add_capacitor("Cw[" + std::to_string(c) + "]" + half, cap / 2.0, in, t);
        col_nodes[c].push_back(in);
      }
    } else {
      const NodeId in = net.add_node(col_name(c), NodeRole::driven);
      const NodeId t = top_plate("top[" + std::to_string(c) + "]");
      net.add_capacitor("Cw[" + std::to_string(c) + "]", cap, in, t);
      col_nodes[c].push_back(in);
    }
  }

  // C-2C section: ladder node j carries column (lowest_binary - 1 - j); the
  // last node carries both half columns as shunt and termination.
  NodeId prev = top_plate("ladder[0]");
  for (std::size_t j = 0; j <= lower; ++j) {
    if (j > 0) {
      const NodeId x = net.add_node("ladder[" + std::to_string(j) + "]", NodeRole::floating);
      net.add_switch(SwitchGroup::s1, x, gnd);
      net.add_capacitor("Cbridge[" + std::to_string(j) + "]", 2.0 * u, prev, x);
      prev = x;
    }
    if (j < lower) {
      const std::size_t c = lowest_binary - 1 - j;
      const NodeId in = net.add_node(col_name(c), NodeRole::driven);
      net.add_capacitor("Cw[" + std::to_string(c) + "]", u, in, prev);
      col_nodes[c].push_back(in);
    } else {
      for (std::size_t c : {std::size_t{0}, std::size_t{1}}) {
        const NodeId in = net.add_node(col_name(c), NodeRole::driven);
        net.add_capacitor("Cw[" + std::to_string(c) + "]", u, in, prev);
        col_nodes[c].push_back(in);
      }
    }
  }

  // Equalize source-line loads with padding capacitors to ground.
  double largest = 0.0;
  for (const auto& nodes : col_nodes)
    for (auto in : nodes) largest = std::max(largest, net.node_load(in));
  const double load = cfg.scl_load.value_or(largest + u);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t k = 0; k < col_nodes[c].size(); ++k) {
      const NodeId in = col_nodes[c][k];
      const double pad = load - net.node_load(in);
      if (pad < -1e-12 * load) {
        throw ConstructionError("source-line load " + std::to_string(load) + "C is smaller than the " +
                                std::to_string(net.node_load(in)) + "C weighting capacitor on " +
                                net.nodes()[in].name);
      }
      if (pad > 1e-12 * load) {
        std::string suffix = col_nodes[c].size() > 1 ? std::string(1, static_cast<char>('a' + k)) : "";
        net.add_capacitor("Cpad[" + std::to_string(c) + "]" + suffix, pad, in, gnd);
      }
    }
  }

  for (std::size_t c = 0; c < n; ++c) net.add_port("col" + std::to_string(c), col_nodes[c]);
  net.validate();
  return net;
}

}  // namespace detail

/// Bank-level (leaf) summation network; evaluates in phase P2.
inline CapNetwork build_caat_leaf(const LeafConfig& cfg = LeafConfig::standard()) {
  return detail::build_hybrid(cfg, SwitchGroup::s2, "scl");
}

/// Array-level (root) network across banks; evaluates in phase P3. Absolute
/// sizes are free, so it reuses the leaf topology with auto-sized loads.
inline CapNetwork build_caat_root(std::size_t n_banks = 9) {
  LeafConfig cfg;
  cfg.n_bits = n_banks;
  cfg.binary_high_bits = n_banks >= 2 ? std::min<std::size_t>(4, n_banks - 2) : 0;
  cfg.msb_split = n_banks >= 3;
  return detail::build_hybrid(cfg, SwitchGroup::s3, "bank");
}

/// Fully binary-weighted comparison network: `bits` columns with capacitors
/// 1C..2^(bits-1)C, every source line padded to the largest capacitor plus
/// one unit. For 8 bits this is 8 x 129C = 1032C.
inline CapNetwork build_binary_leaf(std::size_t bits = 8, double unit_c = 1.0) {
  if (bits == 0 || bits > 30) throw ConstructionError("binary leaf needs 1..30 columns");
  CapNetwork net;
  const NodeId gnd = net.add_node("gnd", NodeRole::driven);
  net.set_ground(gnd);
  const NodeId out = net.add_node("out", NodeRole::floating);
  net.set_output(out);
  net.set_eval_phase(Phase::p2);
  net.add_switch(SwitchGroup::s1, out, gnd);
  const double largest = unit_c * static_cast<double>(std::uint64_t{1} << (bits - 1));
  for (std::size_t c = 0; c < bits; ++c) {
    const double cap = unit_c * static_cast<double>(std::uint64_t{1} << c);
    const NodeId in = net.add_node("scl[" + std::to_string(c) + "]", NodeRole::driven);
    NodeId t = out;
    if (c + 1 < bits) {
      t = net.add_node("top[" + std::to_string(c) + "]", NodeRole::floating);
      net.add_switch(SwitchGroup::s2, t, out);
      net.add_switch(SwitchGroup::s1, t, gnd);
    }
    net.add_capacitor("Cw[" + std::to_string(c) + "]", cap, in, t);
    if (largest + unit_c - cap > 0.0) net.add_capacitor("Cpad[" + std::to_string(c) + "]", largest + unit_c - cap, in, gnd);
    net.add_port("col" + std::to_string(c), {in});
  }
  net.validate();
  return net;
}

/// Binary-weighted SAR capacitive DAC: bit b drives 2^b C onto the top plate,
/// plus a 1C termination to ground, so bit weights are 2^b / 2^bits.
inline CapNetwork build_sar_dac(std::size_t bits = 8, double unit_c = 1.0) {
  if (bits == 0 || bits > 30) throw ConstructionError("SAR DAC needs 1..30 bits");
  CapNetwork net;
  const NodeId gnd = net.add_node("gnd", NodeRole::driven);
  net.set_ground(gnd);
  const NodeId top = net.add_node("dac_out", NodeRole::floating);
  net.set_output(top);
  net.set_eval_phase(Phase::p3);
  net.add_switch(SwitchGroup::s1, top, gnd);
  net.add_capacitor("Cterm", unit_c, gnd, top);
  for (std::size_t b = 0; b < bits; ++b) {
    const NodeId in = net.add_node("dac[" + std::to_string(b) + "]", NodeRole::driven);
    net.add_capacitor("Cdac[" + std::to_string(b) + "]", unit_c * static_cast<double>(std::uint64_t{1} << b), in, top);
    net.add_port("b" + std::to_string(b), {in});
  }
  net.validate();
  return net;
}

/// Copy of `net` with every capacitor's epsilon drawn from N(0, sigma_c).
/// Draws follow capacitor order, so a seed fully determines the result.
inline CapNetwork inject_mismatch(const CapNetwork& net, double sigma_c, std::uint64_t seed) {
  if (!(sigma_c >= 0.0) || !std::isfinite(sigma_c)) throw RangeError("sigma_c must be finite and >= 0");
  CapNetwork copy = net;
  if (sigma_c == 0.0) return copy;
  auto rng = make_rng(seed, 0x6d69736d61746368ULL);
  std::normal_distribution<double> dist(0.0, sigma_c);
  for (auto& c : copy.capacitors()) {
    c.epsilon = dist(rng);
    if (!(c.value() > 0.0)) throw ConstructionError("mismatch drove capacitor '" + c.id + "' non-positive");
  }
  return copy;
}

/// Adds a fixed parasitic capacitor from every floating node to ground.
inline CapNetwork with_parasitics(const CapNetwork& net, double c_parasitic) {
  if (!(c_parasitic >= 0.0)) throw RangeError("parasitic capacitance must be >= 0");
  CapNetwork copy = net;
  if (c_parasitic == 0.0) return copy;
  if (!copy.ground()) throw ConstructionError("parasitics need a ground node");
  const auto nodes = net.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].role == NodeRole::floating) {
      copy.add_capacitor("Cpar[" + nodes[i].name + "]", c_parasitic, i, *copy.ground());
    }
  }
  return copy;
}

// ---------------------------------------------------------------------------
// INL
// ---------------------------------------------------------------------------

/// One point of a realized transfer, both coordinates in LSB units.
struct TransferPoint {
  double ideal = 0.0;
  double realized = 0.0;
};

struct InlProfile {
  std::vector<double> inl;  // per point, in (end-point) LSB units
  double max_abs_inl = 0.0;
  double effective_bits = 0.0;
  bool monotone = true;
};

/// End-point-fit INL. The fit line passes through the points with the lowest
/// and highest ideal coordinate; effective bits are
///   target_bits - log2(max(1, 2 * max|INL|)).
inline InlProfile inl_profile(std::span<const TransferPoint> transfer, double target_bits) {
  if (transfer.size() < 2) throw InputError("INL needs at least two transfer points");
  std::vector<TransferPoint> pts(transfer.begin(), transfer.end());
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.ideal < b.ideal; });
  const auto& first = pts.front();
  const auto& last = pts.back();
  if (!(last.ideal > first.ideal)) throw InputError("INL needs at least two distinct ideal codes");
  const double lsb = (last.realized - first.realized) / (last.ideal - first.ideal);
  if (!(lsb > 0.0)) throw InputError("transfer end points are not increasing");

  InlProfile prof;
  prof.inl.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double fit = first.realized + (pts[i].ideal - first.ideal) * lsb;
    const double e = (pts[i].realized - fit) / lsb;
    prof.inl.push_back(e);
    prof.max_abs_inl = std::max(prof.max_abs_inl, std::abs(e));
    if (i > 0 && pts[i].ideal > pts[i - 1].ideal && pts[i].realized < pts[i - 1].realized) prof.monotone = false;
  }
  prof.effective_bits = target_bits - std::log2(std::max(1.0, 2.0 * prof.max_abs_inl));
  return prof;
}

/// Transfer of a summation network over every +-1 pattern of its inputs.
/// Both coordinates are scaled so the full output span is 2 * full_scale_lsb.
inline std::vector<TransferPoint> network_transfer(std::span<const double> realized_weights,
                                                   std::span<const double> ideal_weights, double full_scale_lsb) {
  if (realized_weights.size() != ideal_weights.size()) throw LengthError("weight vectors differ in length");
  const std::size_t n = realized_weights.size();
  if (n == 0 || n > 20) throw InputError("network_transfer supports 1..20 inputs");
  const double ideal_sum = std::accumulate(ideal_weights.begin(), ideal_weights.end(), 0.0);
  std::vector<TransferPoint> pts;
  pts.reserve(std::size_t{1} << n);
  for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
    double r = 0.0;
    double i = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = ((mask >> k) & 1U) != 0 ? 1.0 : -1.0;
      r += realized_weights[k] * d;
      i += ideal_weights[k] * d;
    }
    pts.push_back({i / ideal_sum * full_scale_lsb, r * full_scale_lsb});
  }
  return pts;
}

/// INL of a summation network against its own mismatch-free design.
inline InlProfile network_inl(const CapNetwork& net, double target_bits = 8.0) {
  const auto realized = effective_weights<double>(net);
  const auto ideal = effective_weights<double>(net.without_mismatch());
  const auto pts = network_transfer(realized, ideal, std::ldexp(1.0, static_cast<int>(target_bits) - 1));
  return inl_profile(pts, target_bits);
}

// ---------------------------------------------------------------------------
// Structured dump / load
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CapNetwork& net) {
  using nlohmann::json;
  const auto nodes = net.nodes();
  json j;
  j["schema_version"] = 1;
  j["nodes"] = json::array();
  for (const auto& n : nodes) {
    j["nodes"].push_back({{"name", n.name}, {"role", n.role == NodeRole::driven ? "driven" : "floating"}});
  }
  j["capacitors"] = json::array();
  for (const auto& c : net.capacitors()) {
    j["capacitors"].push_back(
        {{"id", c.id}, {"nominal", c.nominal}, {"epsilon", c.epsilon}, {"a", nodes[c.a].name}, {"b", nodes[c.b].name}});
  }
  j["switches"] = json::array();
  for (const auto& s : net.switches()) {
    j["switches"].push_back({{"group", to_string(s.group)}, {"a", nodes[s.a].name}, {"b", nodes[s.b].name}});
  }
  j["ports"] = json::array();
  for (const auto& p : net.ports()) {
    json names = json::array();
    for (auto n : p.nodes) names.push_back(nodes[n].name);
    j["ports"].push_back({{"name", p.name}, {"nodes", names}});
  }
  j["output"] = net.output() ? json(nodes[*net.output()].name) : json(nullptr);
  j["ground"] = net.ground() ? json(nodes[*net.ground()].name) : json(nullptr);
  j["eval_phase"] = to_string(net.eval_phase());
  return j;
}

inline std::string dump_network(const CapNetwork& net) { return to_json(net).dump(2) + "\n"; }

inline CapNetwork network_from_json(const nlohmann::json& j) {
  auto group_of = [](const std::string& s) {
    if (s == "S1") return SwitchGroup::s1;
    if (s == "S2") return SwitchGroup::s2;
    if (s == "S3") return SwitchGroup::s3;
    throw InputError("unknown switch group '" + s + "'");
  };
  try {
    if (j.at("schema_version").get<int>() != 1) throw InputError("unsupported network schema_version");
    CapNetwork net;
    for (const auto& n : j.at("nodes")) {
      const auto role = n.at("role").get<std::string>();
      if (role != "driven" && role != "floating") throw InputError("unknown node role '" + role + "'");
      net.add_node(n.at("name").get<std::string>(), role == "driven" ? NodeRole::driven : NodeRole::floating);
    }
    for (const auto& c : j.at("capacitors")) {
      net.add_capacitor(c.at("id").get<std::string>(), c.at("nominal").get<double>(),
                        net.node(c.at("a").get<std::string>()), net.node(c.at("b").get<std::string>()),
                        c.at("epsilon").get<double>());
    }
    for (const auto& s : j.at("switches")) {
      net.add_switch(group_of(s.at("group").get<std::string>()), net.node(s.at("a").get<std::string>()),
                     net.node(s.at("b").get<std::string>()));
    }
    for (const auto& p : j.at("ports")) {
      std::vector<NodeId> ids;
      for (const auto& name : p.at("nodes")) ids.push_back(net.node(name.get<std::string>()));
      net.add_port(p.at("name").get<std::string>(), std::move(ids));
    }
    if (!j.at("output").is_null()) net.set_output(net.node(j.at("output").get<std::string>()));
    if (!j.at("ground").is_null()) net.set_ground(net.node(j.at("ground").get<std::string>()));
    const auto phase = group_of("S" + j.at("eval_phase").get<std::string>().substr(1));
    net.set_eval_phase(static_cast<Phase>(static_cast<int>(phase)));
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed network document: ") + e.what());
  }
}

inline CapNetwork load_network(const std::string& text) {
  try {
    return network_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("network document is not valid JSON: ") + e.what());
  }
}

}  // namespace cdcim
