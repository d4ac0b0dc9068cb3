#include "config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tms/error.hpp"
#include "version.hpp"

namespace tms::cli {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(Errc::ConfigError, "config line " + std::to_string(line) + ": " + msg);
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment, leaving '#' inside a quoted string alone.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) {
      ++i;
    } else if (s[i] == '"') {
      quoted = !quoted;
    } else if (s[i] == '#' && !quoted) {
      return s.substr(0, i);
    }
  }
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  std::string cleaned;
  for (char c : s) {
    if (c != '_') cleaned += c;
  }
  if (!cleaned.empty() && cleaned[0] == '+') cleaned.erase(0, 1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), v);
  if (ec != std::errc() || end != cleaned.data() + cleaned.size() || cleaned.empty()) return std::nullopt;
  return v;
}

TomlValue parse_value(std::string_view s, std::size_t line) {
  if (s.empty()) fail(line, "missing value");
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] != '\\') {
        out += s[i];
        continue;
      }
      if (i + 2 >= s.size()) fail(line, "dangling escape");
      switch (s[++i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail(line, "unsupported escape");
      }
    }
    return out;
  }
  if (s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    std::vector<double> items;
    const std::string_view body = trim(s.substr(1, s.size() - 2));
    std::size_t start = 0;
    while (start <= body.size() && !body.empty()) {
      const auto comma = body.find(',', start);
      const auto item = trim(body.substr(start, comma == std::string_view::npos ? body.npos : comma - start));
      if (item.empty()) {
        if (comma == std::string_view::npos) break;  // trailing comma
        fail(line, "empty array element");
      }
      const auto v = parse_number(item);
      if (!v) fail(line, "arrays may only hold numbers");
      items.push_back(*v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return items;
  }
  if (const auto v = parse_number(s)) return *v;
  fail(line, "cannot read value '" + std::string(s) + "'");
}

}  // namespace

TomlDocument parse_toml(std::string_view text) {
  TomlDocument doc;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail(line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) fail(line_no, "empty key");
    if (doc[section].contains(key)) fail(line_no, "duplicate key '" + key + "'");
    doc[section][key] = parse_value(trim(line.substr(eq + 1)), line_no);
  }
  return doc;
}

namespace {

const char* activation_name(EvidenceActivation a) {
  switch (a) {
    case EvidenceActivation::Softplus: return "softplus";
    case EvidenceActivation::Relu: return "relu";
    case EvidenceActivation::Exp: return "exp";
  }
  return "softplus";
}

EvidenceActivation activation_from(const std::string& s) {
  if (s == "softplus") return EvidenceActivation::Softplus;
  if (s == "relu") return EvidenceActivation::Relu;
  if (s == "exp") return EvidenceActivation::Exp;
  throw Error(Errc::ConfigError, "unknown evidence activation '" + s + "'");
}

RegressionBound bound_from(const std::string& s) {
  if (s == "sigmoid") return RegressionBound::Sigmoid;
  if (s == "softplus") return RegressionBound::Softplus;
  throw Error(Errc::ConfigError, "unknown regression bound '" + s + "'");
}

template <typename T>
const T& expect(const TomlValue& v, const std::string& where, const char* type) {
  if (const T* p = std::get_if<T>(&v)) return *p;
  throw Error(Errc::ConfigError, where + " must be " + type);
}

long whole(const TomlValue& v, const std::string& where) {
  const double d = expect<double>(v, where, "a number");
  if (d != static_cast<double>(static_cast<long>(d))) throw Error(Errc::ConfigError, where + " must be a whole number");
  return static_cast<long>(d);
}

long non_negative(const TomlValue& v, const std::string& where) {
  const long n = whole(v, where);
  if (n < 0) throw Error(Errc::ConfigError, where + " must be >= 0");
  return n;
}

using Table = std::map<std::string, std::map<std::string, std::function<void(CliConfig&, const TomlValue&, const std::string&)>>>;

const Table& setters() {
  static const Table table = [] {
    Table t;
    auto real = [](auto member) {
      return [member](CliConfig& c, const TomlValue& v, const std::string& w) {
        member(c) = expect<double>(v, w, "a number");
      };
    };
    auto flag = [](auto member) {
      return [member](CliConfig& c, const TomlValue& v, const std::string& w) {
        member(c) = expect<bool>(v, w, "true or false");
      };
    };
    auto text = [](auto member) {
      return [member](CliConfig& c, const TomlValue& v, const std::string& w) {
        member(c) = expect<std::string>(v, w, "a string");
      };
    };
    auto integer = [](auto member) {
      return [member](CliConfig& c, const TomlValue& v, const std::string& w) {
        member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(whole(v, w));
      };
    };
    auto count = [](auto member) {
      return [member](CliConfig& c, const TomlValue& v, const std::string& w) {
        member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(non_negative(v, w));
      };
    };

    t["smiles"]["largest_component"] = flag([](CliConfig& c) -> bool& { return c.largest_component; });
    t["featurize"]["threads"] = count([](CliConfig& c) -> unsigned& { return c.train.threads; });

    t["encoder"]["num_gin_layers"] = integer([](CliConfig& c) -> int& { return c.train.encoder.num_gin_layers; });
    t["encoder"]["hidden_dim"] = integer([](CliConfig& c) -> int& { return c.train.encoder.hidden_dim; });
    t["encoder"]["mlp_layers"] = integer([](CliConfig& c) -> int& { return c.train.encoder.mlp_layers; });
    t["encoder"]["projection_dim"] = integer([](CliConfig& c) -> int& { return c.train.encoder.projection_dim; });
    t["encoder"]["epsilon_init"] = real([](CliConfig& c) -> double& { return c.train.encoder.epsilon_init; });
    t["encoder"]["scaling_factor"] = real([](CliConfig& c) -> double& { return c.train.encoder.scaling_factor; });
    t["encoder"]["normalize"] = flag([](CliConfig& c) -> bool& { return c.train.encoder.normalize; });

    t["objectives"]["lambda"] = real([](CliConfig& c) -> double& { return c.train.objective.lambda; });
    t["objectives"]["tau"] = real([](CliConfig& c) -> double& { return c.train.objective.tau; });
    t["objectives"]["symmetric_contrastive"] =
        flag([](CliConfig& c) -> bool& { return c.train.objective.symmetric_contrastive; });
    t["objectives"]["evidence_activation"] = [](CliConfig& c, const TomlValue& v, const std::string& w) {
      c.train.evidence = activation_from(expect<std::string>(v, w, "a string"));
    };
    t["objectives"]["regression_bound"] = [](CliConfig& c, const TomlValue& v, const std::string& w) {
      c.train.regression_bound = bound_from(expect<std::string>(v, w, "a string"));
    };

    t["train"]["task"] = text([](CliConfig& c) -> std::string& { return c.task; });
    t["train"]["smiles_column"] = text([](CliConfig& c) -> std::string& { return c.smiles_column; });
    t["train"]["label_column"] = text([](CliConfig& c) -> std::string& { return c.label_column; });
    t["train"]["id_column"] = text([](CliConfig& c) -> std::string& { return c.id_column; });
    t["train"]["test_fraction"] = real([](CliConfig& c) -> double& { return c.test_fraction; });
    t["train"]["lr"] = real([](CliConfig& c) -> double& { return c.train.lr; });
    t["train"]["batch_size"] = count([](CliConfig& c) -> std::size_t& { return c.train.batch_size; });
    t["train"]["epochs"] = integer([](CliConfig& c) -> int& { return c.train.epochs; });
    t["train"]["folds"] = integer([](CliConfig& c) -> int& { return c.train.folds; });
    t["train"]["seed"] = count([](CliConfig& c) -> std::uint64_t& { return c.train.seed; });
    t["train"]["target_scaling"] = text([](CliConfig& c) -> std::string& { return c.train.target_scaling; });
    t["train"]["early_stopping"] = flag([](CliConfig& c) -> bool& { return c.train.early_stopping; });
    t["train"]["patience"] = integer([](CliConfig& c) -> int& { return c.train.patience; });
    t["train"]["validation_fraction"] = real([](CliConfig& c) -> double& { return c.train.validation_fraction; });
    t["train"]["class_weight"] = flag([](CliConfig& c) -> bool& { return c.train.class_weight; });

    t["evaluate"]["thresholds"] = [](CliConfig& c, const TomlValue& v, const std::string& w) {
      c.thresholds = expect<std::vector<double>>(v, w, "an array of numbers");
    };
    t["evaluate"]["fail_on_undefined"] = flag([](CliConfig& c) -> bool& { return c.fail_on_undefined; });
    return t;
  }();
  return table;
}

}  // namespace

void apply_document(CliConfig& config, const TomlDocument& doc) {
  const Table& table = setters();
  for (const auto& [section, keys] : doc) {
    const auto sec = table.find(section);
    if (sec == table.end()) {
      throw Error(Errc::ConfigError, section.empty() ? "config keys must sit under a [section]"
                                                     : "unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      const auto it = sec->second.find(key);
      if (it == sec->second.end()) throw Error(Errc::ConfigError, "unknown key '" + key + "' in [" + section + "]");
      it->second(config, value, section + "." + key);
    }
  }
}

CliConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  CliConfig config;
  apply_document(config, parse_toml(buf.str()));
  return config;
}

void apply(CliConfig& c, const Overrides& o) {
  auto set = [](auto& field, const auto& value) {
    if (value) field = *value;
  };
  set(c.task, o.task);
  set(c.smiles_column, o.smiles_column);
  set(c.label_column, o.label_column);
  set(c.id_column, o.id_column);
  set(c.test_fraction, o.test_fraction);
  set(c.largest_component, o.largest_component);
  set(c.thresholds, o.thresholds);
  set(c.fail_on_undefined, o.fail_on_undefined);
  set(c.train.target_scaling, o.target_scaling);
  if (o.evidence_activation) c.train.evidence = activation_from(*o.evidence_activation);
  set(c.train.lr, o.lr);
  set(c.train.objective.lambda, o.lambda);
  set(c.train.objective.tau, o.tau);
  set(c.train.encoder.scaling_factor, o.scaling_factor);
  set(c.train.validation_fraction, o.validation_fraction);
  set(c.train.epochs, o.epochs);
  set(c.train.folds, o.folds);
  set(c.train.patience, o.patience);
  set(c.train.encoder.hidden_dim, o.hidden_dim);
  set(c.train.encoder.num_gin_layers, o.gin_layers);
  set(c.train.encoder.projection_dim, o.projection_dim);
  set(c.train.batch_size, o.batch_size);
  set(c.train.seed, o.seed);
  set(c.train.threads, o.threads);
  set(c.train.early_stopping, o.early_stopping);
  set(c.train.class_weight, o.class_weight);
}

Schema CliConfig::schema() const {
  Schema s;
  s.smiles_col = smiles_column;
  s.label_col = label_column;
  s.id_col = id_column;
  s.task = task_kind();
  s.parse = parse_options();
  return s;
}

void CliConfig::validate() const {
  task_kind();
  train.validate();
  if (train.folds < 1) throw Error(Errc::ConfigError, "train.folds must be >= 1");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::ConfigError, "train.test_fraction must lie in [0, 1)");
  }
  const auto& ts = train.target_scaling;
  if (ts != "minmax" && ts != "zscore" && ts != "none") {
    throw Error(Errc::ConfigError, "train.target_scaling must be minmax, zscore or none");
  }
  if (thresholds.empty()) throw Error(Errc::ConfigError, "evaluate.thresholds must not be empty");
  for (double t : thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(Errc::ConfigError, "evaluate.thresholds must lie in (0, 1]");
  }
}

std::string to_json(const CliConfig& c) {
  const auto& e = c.train.encoder;
  const nlohmann::json j{
      {"smiles", {{"largest_component", c.largest_component}}},
      {"featurize", {{"threads", c.train.threads}}},
      {"encoder",
       {{"num_gin_layers", e.num_gin_layers},
        {"hidden_dim", e.hidden_dim},
        {"mlp_layers", e.mlp_layers},
        {"projection_dim", e.projection_dim},
        {"epsilon_init", e.epsilon_init},
        {"scaling_factor", e.scaling_factor},
        {"normalize", e.normalize}}},
      {"objectives",
       {{"lambda", c.train.objective.lambda},
        {"tau", c.train.objective.tau},
        {"symmetric_contrastive", c.train.objective.symmetric_contrastive},
        {"evidence_activation", activation_name(c.train.evidence)},
        {"regression_bound", c.train.regression_bound == RegressionBound::Sigmoid ? "sigmoid" : "softplus"}}},
      {"train",
       {{"task", to_string(c.task_kind())},
        {"smiles_column", c.smiles_column},
        {"label_column", c.label_column},
        {"id_column", c.id_column},
        {"test_fraction", c.test_fraction},
        {"lr", c.train.lr},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"folds", c.train.folds},
        {"seed", c.train.seed},
        {"target_scaling", c.train.target_scaling},
        {"early_stopping", c.train.early_stopping},
        {"patience", c.train.patience},
        {"validation_fraction", c.train.validation_fraction},
        {"class_weight", c.train.class_weight}}},
      {"evaluate", {{"thresholds", c.thresholds}, {"fail_on_undefined", c.fail_on_undefined}}},
  };
  return j.dump();
}

std::string_view version() { return kVersion; }

}  // namespace tms::cli
