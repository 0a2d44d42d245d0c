#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kacmf/errors.hpp"
#include "kacmf/particles.hpp"

namespace kacmf {

namespace config_detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace config_detail

// Flat "[section]" + "key = value" file. '#' starts a comment. Unknown or
// duplicate keys are rejected.
class KeyValueFile {
 public:
  static KeyValueFile parse_stream(std::istream& in, const std::string& name) {
    KeyValueFile kv;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = config_detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw config_error(name + ":" + std::to_string(lineno) +
                             ": malformed section header");
        section = config_detail::trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw config_error(name + ":" + std::to_string(lineno) +
                             ": empty section name");
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw config_error(name + ":" + std::to_string(lineno) +
                           ": expected key = value");
      const std::string key =
          section + "." + config_detail::trim(line.substr(0, eq));
      const std::string value = config_detail::trim(line.substr(eq + 1));
      if (kv.values_.count(key))
        throw config_error(name + ":" + std::to_string(lineno) +
                           ": duplicate key '" + key + "'");
      kv.values_[key] = value;
    }
    return kv;
  }

  static KeyValueFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    return parse_stream(in, path);
  }

  static KeyValueFile parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse_stream(in, "<string>");
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end())
      throw config_error("missing config key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::string get_string_or(const std::string& key, const std::string& dflt) {
    return has(key) ? get_string(key) : dflt;
  }

  double get_double(const std::string& key) {
    return to_double(key, get_string(key));
  }
  double get_double_or(const std::string& key, double dflt) {
    return has(key) ? get_double(key) : dflt;
  }

  long long get_int(const std::string& key) {
    return to_int(key, get_string(key));
  }
  long long get_int_or(const std::string& key, long long dflt) {
    return has(key) ? get_int(key) : dflt;
  }

  bool get_bool_or(const std::string& key, bool dflt) {
    if (!has(key)) return dflt;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("config key '" + key + "': expected a boolean, got '" +
                       v + "'");
  }

  std::vector<double> get_double_list(const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : config_detail::split(get_string(key), ','))
      out.push_back(to_double(key, tok));
    return out;
  }

  std::vector<long long> get_int_list(const std::string& key) {
    std::vector<long long> out;
    for (const auto& tok : config_detail::split(get_string(key), ','))
      out.push_back(to_int(key, tok));
    return out;
  }

  // every key must have been consumed
  void reject_unknown() const {
    for (const auto& [key, value] : values_)
      if (!used_.count(key))
        throw config_error("unknown config key '" + key + "'");
  }

 private:
  double to_double(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const double x = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw config_error("config key '" + key + "': expected a number, got '" +
                         v + "'");
    }
  }
  long long to_int(const std::string& key, const std::string& v) const {
    try {
      std::size_t pos = 0;
      const long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw config_error("config key '" + key +
                         "': expected an integer, got '" + v + "'");
    }
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

// Fully validated experiment description.
struct ExperimentConfig {
  // model
  int d = 3;
  double r = 0.5;
  std::string kernel_name = "kac";
  double kernel_epsilon = 0.01;  // surrogate cutoff
  InitialLaw initial;
  double k1 = 0.5;
  double a = 1.0;
  // run
  std::vector<std::size_t> N_list;
  double T = 1.0;
  std::vector<double> checkpoints;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  // bound
  bool lambda_auto = true;
  std::vector<double> lambda_list;
  std::vector<double> epsilon_list;
  bool strict_cubic = false;
  // reference
  std::size_t wild_samples = 0;   // one of these two is nonzero
  std::size_t particle_ref_n = 0;
  // output
  std::string out_dir = "out";
  bool export_reference = false;
  bool export_snapshots = false;

  static ExperimentConfig from_file(const std::string& path) {
    KeyValueFile kv = KeyValueFile::parse_file(path);
    return from_kv(kv);
  }
  static ExperimentConfig from_string(const std::string& text) {
    KeyValueFile kv = KeyValueFile::parse_string(text);
    return from_kv(kv);
  }

  static ExperimentConfig from_kv(KeyValueFile& kv) {
    ExperimentConfig c;
    c.d = static_cast<int>(kv.get_int_or("model.d", 3));
    c.r = kv.get_double_or("model.r", 0.5);
    c.kernel_name = kv.get_string_or("model.kernel", "kac");
    c.kernel_epsilon = kv.get_double_or("model.kernel_epsilon", 0.01);
    const std::string init = kv.get_string_or("model.initial", "two_atom");
    c.k1 = kv.get_double_or("model.k1", 0.5);
    c.a = kv.get_double_or("model.a", 1.0);

    if (kv.has("run.N")) {
      for (long long n : kv.get_int_list("run.N")) {
        if (n < 2) throw config_error("run.N entries must be >= 2");
        c.N_list.push_back(static_cast<std::size_t>(n));
      }
    }
    c.T = kv.get_double_or("run.T", 1.0);
    if (kv.has("run.checkpoints"))
      c.checkpoints = kv.get_double_list("run.checkpoints");
    else
      c.checkpoints = {c.T};
    c.replicas = static_cast<std::size_t>(kv.get_int_or("run.replicas", 1));
    c.seed = static_cast<std::uint64_t>(kv.get_int_or("run.seed", 0));

    if (kv.has("bound.lambda")) {
      const std::string lam = kv.get_string("bound.lambda");
      if (lam == "auto") {
        c.lambda_auto = true;
      } else {
        c.lambda_auto = false;
        for (const auto& tok : config_detail::split(lam, ','))
          c.lambda_list.push_back(std::stod(tok));
      }
    }
    if (kv.has("bound.epsilon")) c.epsilon_list = kv.get_double_list("bound.epsilon");
    c.strict_cubic = kv.get_bool_or("bound.strict_cubic", false);

    c.wild_samples =
        static_cast<std::size_t>(kv.get_int_or("reference.wild_samples", 0));
    c.particle_ref_n =
        static_cast<std::size_t>(kv.get_int_or("reference.particle_N", 0));
    c.out_dir = kv.get_string_or("output.directory", "out");
    c.export_reference = kv.get_bool_or("output.export_reference", false);
    c.export_snapshots = kv.get_bool_or("output.export_snapshots", false);

    // initial law needs d, so build it last
    if (init == "two_atom") {
      c.initial = InitialLaw::two_atom(c.d);
    } else if (init == "gaussian") {
      c.initial = InitialLaw::gaussian(c.d, kv.get_double("model.initial_energy"));
    } else if (init == "discrete") {
      // "x1 x2 ... xd : p ; x1 ... xd : p ; ..."
      const std::string spec = kv.get_string("model.initial_atoms");
      std::vector<double> coords, probs;
      for (const auto& atom : config_detail::split(spec, ';')) {
        if (atom.empty()) continue;
        const auto parts = config_detail::split(atom, ':');
        if (parts.size() != 2)
          throw config_error("model.initial_atoms: expected 'coords : prob'");
        std::istringstream cs(parts[0]);
        double x;
        int got = 0;
        while (cs >> x) {
          coords.push_back(x);
          ++got;
        }
        if (got != c.d)
          throw config_error("model.initial_atoms: wrong coordinate count");
        probs.push_back(std::stod(parts[1]));
      }
      c.initial = InitialLaw::discrete(c.d, std::move(coords), std::move(probs));
    } else {
      throw config_error("model.initial: unknown law '" + init + "'");
    }

    kv.reject_unknown();
    c.validate();
    return c;
  }

  void validate() const {
    if (d < 2) throw config_error("model.d must be >= 2");
    if (!(r > 0.0) || !(r < 1.0)) throw config_error("model.r must lie in (0, 1)");
    if (kernel_name != "kac" && kernel_name != "surrogate")
      throw config_error("model.kernel must be 'kac' or 'surrogate'");
    if (kernel_name == "surrogate" &&
        !(kernel_epsilon > 0.0 && kernel_epsilon < 3.14159265358979323846))
      throw config_error("model.kernel_epsilon must lie in (0, pi)");
    if (!(k1 > 0.0)) throw config_error("model.k1 must be > 0");
    if (!(a > 0.0)) throw config_error("model.a must be > 0");
    if (T < 0.0) throw config_error("run.T must be >= 0");
    double prev = 0.0;
    for (double cp : checkpoints) {
      if (cp < prev || cp > T)
        throw config_error("run.checkpoints must be sorted within [0, T]");
      prev = cp;
    }
    for (double eps : epsilon_list)
      if (!(eps > 0.0)) throw config_error("bound.epsilon entries must be > 0");
    for (double lam : lambda_list)
      if (!(lam > 0.0)) throw config_error("bound.lambda entries must be > 0");
    if (wild_samples > 0 && particle_ref_n > 0)
      throw config_error(
          "reference: give either wild_samples or particle_N, not both");
    initial.validate();
    if (initial.dim != d) throw config_error("initial law dimension mismatch");
  }

  AngularKernel make_kernel() const {
    if (kernel_name == "kac") return kac_kernel(d);
    return maxwell_potential_surrogate(d, kernel_epsilon);
  }
};

}  // namespace kacmf
