#include "tms/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>

#include "tms/error.hpp"

namespace tms {
namespace {

struct ElementInfo {
  Element element;
  std::string_view symbol;
  double weight;
  std::array<int, 3> valences;  // zero-padded
  bool aromatic_ok;
};

constexpr std::array<ElementInfo, kNumElements> kElements{{
    {Element::B, "B", 10.811, {3, 0, 0}, true},
    {Element::C, "C", 12.011, {4, 0, 0}, true},
    {Element::N, "N", 14.007, {3, 5, 0}, true},
    {Element::O, "O", 15.999, {2, 0, 0}, true},
    {Element::P, "P", 30.974, {3, 5, 0}, true},
    {Element::S, "S", 32.065, {2, 4, 6}, true},
    {Element::F, "F", 18.998, {1, 0, 0}, false},
    {Element::Cl, "Cl", 35.453, {1, 0, 0}, false},
    {Element::Br, "Br", 79.904, {1, 0, 0}, false},
    {Element::I, "I", 126.904, {1, 0, 0}, false},
}};

const ElementInfo& info(Element e) { return kElements[static_cast<std::size_t>(e)]; }

std::optional<Element> element_from_symbol(std::string_view sym) {
  for (const auto& e : kElements) {
    if (e.symbol == sym) return e.element;
  }
  return std::nullopt;
}

int bond_valence(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 1;
    case BondOrder::Double: return 2;
    case BondOrder::Triple: return 3;
    case BondOrder::Aromatic: return 1;
  }
  return 1;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Molecule run(const ParseOptions& options);

 private:
  struct RingOpen {
    int atom;
    std::optional<BondOrder> order;
    bool explicit_bond;
  };

  [[noreturn]] void fail(Errc code, const std::string& msg) const {
    throw Error(code, msg + " at position " + std::to_string(pos_) + " in \"" +
                          std::string(text_) + "\"");
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void parse_bracket_atom();
  void parse_organic_atom();
  void attach_atom(Atom atom);
  void add_bond(int a, int b, std::optional<BondOrder> order);
  void ring_closure(int number);
  void warn_stereo();

  std::string_view text_;
  std::size_t pos_ = 0;
  Molecule mol_;
  int prev_ = -1;
  std::vector<int> branches_;
  std::optional<BondOrder> pending_;
  bool pending_set_ = false;
  std::map<int, RingOpen> rings_;
  bool stereo_warned_ = false;
};

void Parser::warn_stereo() {
  if (!stereo_warned_) {
    mol_.warnings.emplace_back("stereochemistry tokens ignored");
    stereo_warned_ = true;
  }
}

void Parser::add_bond(int a, int b, std::optional<BondOrder> order) {
  if (a == b) fail(Errc::UnsupportedToken, "ring closure bonds an atom to itself");
  for (const auto& bond : mol_.bonds) {
    if ((bond.begin == a && bond.end == b) || (bond.begin == b && bond.end == a)) {
      fail(Errc::UnsupportedToken, "duplicate bond between atoms " + std::to_string(a) +
                                       " and " + std::to_string(b));
    }
  }
  const bool both_aromatic = mol_.atoms[a].aromatic && mol_.atoms[b].aromatic;
  BondOrder resolved = order.value_or(both_aromatic ? BondOrder::Aromatic : BondOrder::Single);
  if (resolved == BondOrder::Aromatic && !both_aromatic) {
    fail(Errc::UnsupportedToken, "aromatic bond between non-aromatic atoms");
  }
  mol_.bonds.push_back(Bond{std::min(a, b), std::max(a, b), resolved});
}

void Parser::attach_atom(Atom atom) {
  if (atom.aromatic && !can_be_aromatic(atom.element)) {
    fail(Errc::UnsupportedToken, "element cannot be aromatic");
  }
  const int idx = static_cast<int>(mol_.atoms.size());
  mol_.atoms.push_back(atom);
  if (prev_ >= 0) {
    add_bond(prev_, idx, pending_);
  } else if (pending_set_) {
    fail(Errc::UnsupportedToken, "bond symbol without a preceding atom");
  }
  pending_.reset();
  pending_set_ = false;
  prev_ = idx;
}

void Parser::parse_organic_atom() {
  const char c = peek();
  Atom atom;
  std::size_t len = 1;
  std::string_view sym;
  if (c == 'B' && peek(1) == 'r') {
    sym = "Br";
    len = 2;
  } else if (c == 'C' && peek(1) == 'l') {
    sym = "Cl";
    len = 2;
  } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
    sym = text_.substr(pos_, 1);
  } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
    const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    atom.aromatic = true;
    atom.element = *element_from_symbol(std::string_view(&upper, 1));
    pos_ += 1;
    attach_atom(atom);
    return;
  } else {
    fail(Errc::UnsupportedToken, std::string("unsupported token '") + c + "'");
  }
  atom.element = *element_from_symbol(sym);
  pos_ += len;
  attach_atom(atom);
}

void Parser::parse_bracket_atom() {
  ++pos_;  // '['
  Atom atom;
  atom.bracket = true;

  if (std::isdigit(static_cast<unsigned char>(peek()))) {
    int iso = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) iso = iso * 10 + (text_[pos_++] - '0');
    atom.isotope = iso;
  }

  const char c = peek();
  if (std::isupper(static_cast<unsigned char>(c))) {
    std::optional<Element> el;
    if (std::islower(static_cast<unsigned char>(peek(1)))) {
      const std::string_view two = text_.substr(pos_, 2);
      el = element_from_symbol(two);
      // Nothing but a two-letter symbol can put a lowercase letter here.
      if (!el) fail(Errc::UnsupportedToken, "unsupported element '" + std::string(two) + "'");
      pos_ += 2;
    }
    if (!el) {
      el = element_from_symbol(text_.substr(pos_, 1));
      if (!el) fail(Errc::UnsupportedToken, std::string("unsupported element '") + c + "'");
      pos_ += 1;
    }
    atom.element = *el;
  } else if (std::string_view("bcnops").find(c) != std::string_view::npos && c != '\0') {
    if (c == 's' && peek(1) == 'e') fail(Errc::UnsupportedToken, "unsupported element 'se'");
    const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    atom.element = *element_from_symbol(std::string_view(&upper, 1));
    atom.aromatic = true;
    pos_ += 1;
  } else {
    fail(Errc::UnsupportedToken, "malformed bracket atom");
  }

  if (peek() == '@') {
    warn_stereo();
    while (peek() == '@') ++pos_;
    // @TH1, @SP2, @OH12 and friends
    if (std::isupper(static_cast<unsigned char>(peek())) && peek() != 'H') {
      while (std::isupper(static_cast<unsigned char>(peek()))) ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
  }

  if (peek() == 'H') {
    ++pos_;
    int h = 1;
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      h = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) h = h * 10 + (text_[pos_++] - '0');
    }
    atom.explicit_h = h;
  }

  if (peek() == '+' || peek() == '-') {
    const char sign = peek();
    const int unit = sign == '+' ? 1 : -1;
    ++pos_;
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      int mag = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) mag = mag * 10 + (text_[pos_++] - '0');
      atom.formal_charge = unit * mag;
    } else {
      int count = 1;
      while (peek() == sign) {
        ++count;
        ++pos_;
      }
      atom.formal_charge = unit * count;
    }
  }

  if (peek() == ':') {
    ++pos_;
    if (!std::isdigit(static_cast<unsigned char>(peek()))) fail(Errc::UnsupportedToken, "bad atom class");
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
  }

  if (peek() != ']') fail(Errc::UnsupportedToken, "unterminated bracket atom");
  ++pos_;
  atom.hydrogens = atom.explicit_h;
  attach_atom(atom);
}

void Parser::ring_closure(int number) {
  if (prev_ < 0) fail(Errc::UnsupportedToken, "ring closure without a preceding atom");
  auto it = rings_.find(number);
  if (it == rings_.end()) {
    rings_.emplace(number, RingOpen{prev_, pending_, pending_set_});
  } else {
    std::optional<BondOrder> order = it->second.order;
    if (pending_set_ && it->second.explicit_bond && pending_ != it->second.order) {
      fail(Errc::UnsupportedToken, "conflicting ring closure bond symbols");
    }
    if (pending_set_) order = pending_;
    const int other = it->second.atom;
    rings_.erase(it);
    add_bond(other, prev_, order);
  }
  pending_.reset();
  pending_set_ = false;
}

std::vector<std::vector<int>> components(const Molecule& mol) {
  const auto n = mol.atoms.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& b : mol.bonds) parent[find(b.begin)] = find(b.end);
  std::map<int, std::vector<int>> groups;
  std::vector<int> order;
  for (std::size_t i = 0; i < n; ++i) {
    const int root = find(static_cast<int>(i));
    if (!groups.contains(root)) order.push_back(root);
    groups[root].push_back(static_cast<int>(i));
  }
  std::vector<std::vector<int>> out;
  for (int root : order) out.push_back(std::move(groups[root]));
  return out;
}

Molecule restrict_to(const Molecule& mol, const std::vector<int>& keep) {
  std::vector<int> remap(mol.atoms.size(), -1);
  Molecule out;
  out.warnings = mol.warnings;
  for (int idx : keep) {
    remap[idx] = static_cast<int>(out.atoms.size());
    out.atoms.push_back(mol.atoms[idx]);
  }
  for (const auto& b : mol.bonds) {
    if (remap[b.begin] >= 0) out.bonds.push_back(Bond{remap[b.begin], remap[b.end], b.order});
  }
  return out;
}

// A bond lies on a ring exactly when it is not a bridge.
void assign_ring_membership(Molecule& mol) {
  const int n = static_cast<int>(mol.atoms.size());
  const auto incident = mol.incident_bonds();
  std::vector<int> disc(n, -1), low(n, 0);
  mol.bond_in_ring.assign(mol.bonds.size(), true);
  mol.atom_in_ring.assign(n, false);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int via) {
    disc[u] = low[u] = timer++;
    for (int bi : incident[u]) {
      if (bi == via) continue;
      const auto& b = mol.bonds[bi];
      const int v = b.begin == u ? b.end : b.begin;
      if (disc[v] < 0) {
        dfs(v, bi);
        low[u] = std::min(low[u], low[v]);
        if (low[v] > disc[u]) mol.bond_in_ring[bi] = false;
      } else {
        low[u] = std::min(low[u], disc[v]);
      }
    }
  };
  for (int i = 0; i < n; ++i) {
    if (disc[i] < 0) dfs(i, -1);
  }
  for (std::size_t bi = 0; bi < mol.bonds.size(); ++bi) {
    if (mol.bond_in_ring[bi]) {
      mol.atom_in_ring[mol.bonds[bi].begin] = true;
      mol.atom_in_ring[mol.bonds[bi].end] = true;
    }
  }
}

Molecule Parser::run(const ParseOptions& options) {
  if (text_.empty()) throw Error(Errc::EmptyMolecule, "empty SMILES string");
  bool saw_dot = false;
  while (!at_end()) {
    const char c = peek();
    if (static_cast<unsigned char>(c) > 127) fail(Errc::UnsupportedToken, "non-ASCII input");
    switch (c) {
      case '(':
        if (prev_ < 0) fail(Errc::UnbalancedBranch, "branch without a preceding atom");
        if (pending_set_) fail(Errc::UnsupportedToken, "bond symbol before branch");
        branches_.push_back(prev_);
        ++pos_;
        break;
      case ')':
        if (branches_.empty()) fail(Errc::UnbalancedBranch, "unmatched ')'");
        if (pending_set_) fail(Errc::UnsupportedToken, "bond symbol before ')'");
        prev_ = branches_.back();
        branches_.pop_back();
        ++pos_;
        break;
      case '-':
      case '=':
      case '#':
      case ':':
      case '/':
      case '\\':
        if (pending_set_) fail(Errc::UnsupportedToken, "consecutive bond symbols");
        pending_set_ = true;
        if (c == '-') pending_ = BondOrder::Single;
        else if (c == '=') pending_ = BondOrder::Double;
        else if (c == '#') pending_ = BondOrder::Triple;
        else if (c == ':') pending_ = BondOrder::Aromatic;
        else {
          warn_stereo();
          pending_.reset();
        }
        ++pos_;
        break;
      case '.':
        if (pending_set_) fail(Errc::UnsupportedToken, "bond symbol before '.'");
        saw_dot = true;
        prev_ = -1;
        ++pos_;
        break;
      case '%': {
        if (!std::isdigit(static_cast<unsigned char>(peek(1))) ||
            !std::isdigit(static_cast<unsigned char>(peek(2)))) {
          fail(Errc::UnsupportedToken, "'%' must be followed by two digits");
        }
        const int number = (peek(1) - '0') * 10 + (peek(2) - '0');
        pos_ += 3;
        ring_closure(number);
        break;
      }
      case '[':
        parse_bracket_atom();
        break;
      default:
        if (std::isdigit(static_cast<unsigned char>(c))) {
          ++pos_;
          ring_closure(c - '0');
        } else {
          parse_organic_atom();
        }
    }
  }
  if (pending_set_) fail(Errc::UnsupportedToken, "trailing bond symbol");
  if (!branches_.empty()) fail(Errc::UnbalancedBranch, "unclosed '('");
  if (!rings_.empty()) {
    fail(Errc::DanglingRingClosure, "ring closure " + std::to_string(rings_.begin()->first) +
                                        " never closed");
  }
  if (mol_.atoms.empty()) throw Error(Errc::EmptyMolecule, "no atoms in \"" + std::string(text_) + "\"");

  if (saw_dot) {
    auto comps = components(mol_);
    if (comps.size() > 1) {
      if (!options.keep_largest_component) {
        throw Error(Errc::DisconnectedInput,
                    std::to_string(comps.size()) + " components in \"" + std::string(text_) + "\"");
      }
      const auto largest = std::max_element(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
        return a.size() < b.size();
      });
      mol_ = restrict_to(mol_, *largest);
      mol_.warnings.emplace_back("kept largest of " + std::to_string(comps.size()) + " components");
    }
  }

  const auto incident = mol_.incident_bonds();
  for (std::size_t i = 0; i < mol_.atoms.size(); ++i) {
    std::vector<BondOrder> orders;
    for (int bi : incident[i]) orders.push_back(mol_.bonds[bi].order);
    try {
      mol_.atoms[i].hydrogens = implicit_hydrogens(mol_.atoms[i], orders);
    } catch (const Error& e) {
      throw Error(e.code(), "atom " + std::to_string(i) + " in \"" + std::string(text_) + "\"");
    }
  }
  assign_ring_membership(mol_);
  return std::move(mol_);
}

}  // namespace

std::string_view element_symbol(Element e) noexcept { return info(e).symbol; }
double standard_atomic_weight(Element e) noexcept { return info(e).weight; }
int default_valence(Element e) noexcept { return info(e).valences[0]; }

std::span<const int> allowed_valences(Element e) noexcept {
  const auto& v = info(e).valences;
  const auto count = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](int x) { return x > 0; }));
  return std::span<const int>(v.data(), count);
}

bool can_be_aromatic(Element e) noexcept { return info(e).aromatic_ok; }

std::vector<std::vector<int>> Molecule::incident_bonds() const {
  std::vector<std::vector<int>> out(atoms.size());
  for (std::size_t bi = 0; bi < bonds.size(); ++bi) {
    out[bonds[bi].begin].push_back(static_cast<int>(bi));
    out[bonds[bi].end].push_back(static_cast<int>(bi));
  }
  return out;
}

int implicit_hydrogens(const Atom& atom, std::span<const BondOrder> incident_bond_orders) {
  if (atom.bracket) return atom.explicit_h;
  int sum = 0;
  for (BondOrder o : incident_bond_orders) sum += bond_valence(o);
  if (atom.aromatic) {
    return std::max(0, default_valence(atom.element) - (sum + 1));
  }
  for (int v : allowed_valences(atom.element)) {
    if (v >= sum) return v - sum;
  }
  throw Error(Errc::ValenceViolation, std::string(element_symbol(atom.element)) + " with bond order sum " +
                                          std::to_string(sum));
}

Molecule parse_smiles(std::string_view input, const ParseOptions& options) {
  return Parser(input).run(options);
}

namespace {

std::string atom_token(const Atom& atom) {
  std::string sym(element_symbol(atom.element));
  if (atom.aromatic) sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));
  if (!atom.bracket) return sym;
  std::string out = "[";
  if (atom.isotope) out += std::to_string(*atom.isotope);
  out += sym;
  if (atom.explicit_h > 0) {
    out += 'H';
    if (atom.explicit_h > 1) out += std::to_string(atom.explicit_h);
  }
  if (atom.formal_charge != 0) {
    out += atom.formal_charge > 0 ? '+' : '-';
    const int mag = std::abs(atom.formal_charge);
    if (mag > 1) out += std::to_string(mag);
  }
  out += ']';
  return out;
}

std::string bond_token(const Molecule& mol, const Bond& bond) {
  const bool both_aromatic = mol.atoms[bond.begin].aromatic && mol.atoms[bond.end].aromatic;
  switch (bond.order) {
    case BondOrder::Single: return both_aromatic ? "-" : "";
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return both_aromatic ? "" : ":";
  }
  return "";
}

std::string ring_label(int digit) {
  return digit < 10 ? std::string(1, static_cast<char>('0' + digit)) : "%" + std::to_string(digit);
}

}  // namespace

std::string write_smiles(const Molecule& mol) {
  const int n = static_cast<int>(mol.atoms.size());
  const auto incident = mol.incident_bonds();
  auto other = [&](int bi, int u) { return mol.bonds[bi].begin == u ? mol.bonds[bi].end : mol.bonds[bi].begin; };
  auto sorted_incident = [&](int u) {
    auto list = incident[u];
    std::sort(list.begin(), list.end(), [&](int a, int b) { return other(a, u) < other(b, u); });
    return list;
  };

  // Pass 1: DFS order, tree bonds, ring-closure bonds.
  std::vector<int> order_of(n, -1);
  std::vector<bool> tree_bond(mol.bonds.size(), false);
  int counter = 0;
  std::function<void(int)> visit = [&](int u) {
    order_of[u] = counter++;
    for (int bi : sorted_incident(u)) {
      const int v = other(bi, u);
      if (order_of[v] < 0) {
        tree_bond[bi] = true;
        visit(v);
      }
    }
  };
  std::vector<int> roots;
  for (int i = 0; i < n; ++i) {
    if (order_of[i] < 0) {
      roots.push_back(i);
      visit(i);
    }
  }

  // Pass 2: emit.
  std::string out;
  std::vector<int> ring_digit(mol.bonds.size(), 0);
  std::vector<bool> digit_used(100, false);
  std::function<void(int)> emit = [&](int u) {
    out += atom_token(mol.atoms[u]);
    std::vector<int> children;
    for (int bi : sorted_incident(u)) {
      const int v = other(bi, u);
      if (tree_bond[bi]) {
        if (order_of[v] > order_of[u]) children.push_back(bi);
        continue;
      }
      if (ring_digit[bi] == 0) {
        int d = 1;
        while (digit_used[d]) ++d;
        digit_used[d] = true;
        ring_digit[bi] = d;
        out += bond_token(mol, mol.bonds[bi]) + ring_label(d);
      } else {
        out += ring_label(ring_digit[bi]);
        digit_used[ring_digit[bi]] = false;
      }
    }
    for (std::size_t c = 0; c < children.size(); ++c) {
      const int bi = children[c];
      const bool last = c + 1 == children.size();
      if (!last) out += '(';
      out += bond_token(mol, mol.bonds[bi]);
      emit(other(bi, u));
      if (!last) out += ')';
    }
  };
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0) out += '.';
    emit(roots[r]);
  }
  return out;
}

}  // namespace tms
