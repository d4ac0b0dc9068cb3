#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tms {

/// Elements accepted by the parser. Only the organic subset is supported.
enum class Element : std::uint8_t { B, C, N, O, P, S, F, Cl, Br, I };

inline constexpr std::size_t kNumElements = 10;

std::string_view element_symbol(Element e) noexcept;
double standard_atomic_weight(Element e) noexcept;
/// Lowest normal valence; also the value used for aromatic atoms.
int default_valence(Element e) noexcept;
/// Allowed valence states, ascending.
std::span<const int> allowed_valences(Element e) noexcept;
bool can_be_aromatic(Element e) noexcept;

enum class BondOrder : std::uint8_t { Single, Double, Triple, Aromatic };

struct Atom {
  Element element = Element::C;
  int formal_charge = 0;
  /// H count written inside brackets. Always zero for organic-subset atoms.
  int explicit_h = 0;
  /// Resolved hydrogen count: the bracket count for bracket atoms, otherwise
  /// the implicit count derived from the valence table.
  int hydrogens = 0;
  bool aromatic = false;
  bool bracket = false;
  std::optional<int> isotope;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::Single;

  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Molecule {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::vector<bool> atom_in_ring;
  std::vector<bool> bond_in_ring;
  /// Non-fatal parse notes, e.g. discarded stereo tokens.
  std::vector<std::string> warnings;

  std::size_t num_atoms() const { return atoms.size(); }
  std::size_t num_bonds() const { return bonds.size(); }

  /// Bond indices incident to each atom, in bond order.
  std::vector<std::vector<int>> incident_bonds() const;

  friend bool operator==(const Molecule& a, const Molecule& b) {
    return a.atoms == b.atoms && a.bonds == b.bonds && a.atom_in_ring == b.atom_in_ring &&
           a.bond_in_ring == b.bond_in_ring;
  }
};

struct ParseOptions {
  /// Accept '.'-separated inputs and keep only the largest component
  /// (ties go to the component appearing first).
  bool keep_largest_component = false;
};

/// Parses the supported SMILES subset. Throws tms::Error with one of
/// UnsupportedToken, DanglingRingClosure, UnbalancedBranch, ValenceViolation,
/// DisconnectedInput.
Molecule parse_smiles(std::string_view input, const ParseOptions& options = {});

/// Hydrogen count for `atom` given the orders of its incident bonds.
///
/// Bracket atoms return their explicit count. Aliphatic atoms take the
/// smallest allowed valence that covers the bond-order sum; aromatic atoms
/// count each aromatic bond as 1 plus one for the shared pi electron and use
/// the default valence, clamped at zero.
int implicit_hydrogens(const Atom& atom, std::span<const BondOrder> incident_bond_orders);

/// Writes a SMILES string for `mol` by depth-first traversal from atom 0.
/// The output reparses to an isomorphic molecule; it is not canonical.
std::string write_smiles(const Molecule& mol);

}  // namespace tms
