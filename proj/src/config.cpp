#include "kolmo/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <sstream>
#include <vector>

namespace kolmo {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
}

int64_t parse_i64(const std::string& v, const std::string& source, int line, const std::string& key) {
    int64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        fail(source, line, "expected an integer for '" + key + "', got '" + v + "'");
    return out;
}

uint64_t parse_u64(const std::string& v, const std::string& source, int line, const std::string& key) {
    uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        fail(source, line, "expected a non-negative integer for '" + key + "', got '" + v + "'");
    return out;
}

double parse_double(const std::string& v, const std::string& source, int line, const std::string& key) {
    try {
        size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (...) {
        fail(source, line, "expected a number for '" + key + "', got '" + v + "'");
    }
}

using Setter = std::function<void(RunConfig&, const std::string& value, const std::string& source, int line)>;

struct Entry {
    const char* section;
    const char* key;
    Setter set;
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        {"problem", "name", [](RunConfig& c, const std::string& v, const std::string&, int) { c.problem = v; }},
        {"problem", "dimension",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.dimension = static_cast<int>(parse_i64(v, s, l, "dimension"));
         }},
        {"network", "hidden1",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.hidden1 = static_cast<int>(parse_i64(v, s, l, "hidden1"));
         }},
        {"network", "hidden2",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.hidden2 = static_cast<int>(parse_i64(v, s, l, "hidden2"));
         }},
        {"network", "activation",
         [](RunConfig& c, const std::string& v, const std::string&, int) { c.activation = v; }},
        {"network", "bn_epsilon",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.bn_epsilon = parse_double(v, s, l, "bn_epsilon");
         }},
        {"network", "bn_momentum",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.bn_momentum = parse_double(v, s, l, "bn_momentum");
         }},
        {"training", "batch",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.batch = parse_i64(v, s, l, "batch");
         }},
        {"training", "steps",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.steps = parse_i64(v, s, l, "steps");
         }},
        {"training", "seed",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.seed = parse_u64(v, s, l, "seed");
         }},
        {"training", "precision",
         [](RunConfig& c, const std::string& v, const std::string&, int) { c.precision = v; }},
        {"training", "eval_cadence",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.eval_cadence = parse_i64(v, s, l, "eval_cadence");
         }},
        {"training", "checkpoint_cadence",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.checkpoint_cadence = parse_i64(v, s, l, "checkpoint_cadence");
         }},
        {"training", "learning_rate",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.learning_rate = parse_double(v, s, l, "learning_rate");
         }},
        {"evaluation", "points",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.eval_points = parse_i64(v, s, l, "points");
         }},
        {"evaluation", "reference_samples",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.reference_samples = parse_i64(v, s, l, "reference_samples");
         }},
        {"evaluation", "eval_seed",
         [](RunConfig& c, const std::string& v, const std::string& s, int l) {
             c.eval_seed = parse_u64(v, s, l, "eval_seed");
         }},
        {"output", "directory",
         [](RunConfig& c, const std::string& v, const std::string&, int) { c.out_dir = v; }},
    };
    return table;
}

} // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(source, line_no, "malformed section header '" + t + "'");
            section = trim(t.substr(1, t.size() - 2));
            static const char* known[] = {"problem", "network", "training", "evaluation", "output"};
            if (std::find(std::begin(known), std::end(known), section) == std::end(known))
                fail(source, line_no, "unknown section '" + section + "'");
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos) fail(source, line_no, "expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (section.empty()) fail(source, line_no, "key '" + key + "' appears before any section header");

        if (section == "problem" && key.rfind("constant.", 0) == 0) {
            const std::string name = key.substr(9);
            if (name.empty()) fail(source, line_no, "empty constant name");
            cfg.constants[name] = parse_double(value, source, line_no, key);
            continue;
        }
        bool found = false;
        for (const auto& e : entries()) {
            if (section == e.section && key == e.key) {
                e.set(cfg, value, source, line_no);
                found = true;
                break;
            }
        }
        if (!found) fail(source, line_no, "unknown key '" + key + "' in section [" + section + "]");
    }
    return cfg;
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    std::string constant_name;
    if (key.rfind("constant.", 0) == 0) constant_name = key.substr(9);
    if (key.rfind("problem.constant.", 0) == 0) constant_name = key.substr(17);
    if (!constant_name.empty()) {
        try {
            size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument("");
            cfg.constants[constant_name] = v;
            return;
        } catch (...) {
            throw ConfigError("expected a number for '" + key + "', got '" + value + "'");
        }
    }
    std::string section, bare = key;
    const size_t dotpos = key.find('.');
    if (dotpos != std::string::npos) {
        section = key.substr(0, dotpos);
        bare = key.substr(dotpos + 1);
    }
    const Entry* match = nullptr;
    for (const auto& e : entries()) {
        if (!section.empty() && section != e.section) continue;
        if (bare != e.key) continue;
        if (match) throw ConfigError("override key '" + key + "' is ambiguous; qualify it with a section");
        match = &e;
    }
    if (!match) throw ConfigError("unknown override key '" + key + "'");
    match->set(cfg, value, "<override>", 0);
}

std::string emit_config(const RunConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "# kolmo " << kBuildVersion << " resolved configuration\n";
    os << "[problem]\n";
    os << "name = " << cfg.problem << "\n";
    os << "dimension = " << cfg.dimension << "\n";
    for (const auto& [k, v] : cfg.constants) os << "constant." << k << " = " << v << "\n";
    os << "\n[network]\n";
    os << "hidden1 = " << cfg.hidden1 << "\n";
    os << "hidden2 = " << cfg.hidden2 << "\n";
    os << "activation = " << cfg.activation << "\n";
    os << "bn_epsilon = " << cfg.bn_epsilon << "\n";
    os << "bn_momentum = " << cfg.bn_momentum << "\n";
    os << "\n[training]\n";
    os << "batch = " << cfg.batch << "\n";
    os << "steps = " << cfg.steps << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "precision = " << cfg.precision << "\n";
    os << "eval_cadence = " << cfg.eval_cadence << "\n";
    os << "checkpoint_cadence = " << cfg.checkpoint_cadence << "\n";
    os << "learning_rate = " << cfg.learning_rate << "\n";
    os << "\n[evaluation]\n";
    os << "points = " << cfg.eval_points << "\n";
    os << "reference_samples = " << cfg.reference_samples << "\n";
    os << "eval_seed = " << cfg.eval_seed << "\n";
    os << "\n[output]\n";
    os << "directory = " << cfg.out_dir << "\n";
    return os.str();
}

void RunConfig::validate() const {
    if (problem.empty()) throw ConfigError("no problem selected");
    if (batch < 2) throw ConfigError("batch must be at least 2");
    if (steps < 1) throw ConfigError("steps must be at least 1");
    if (!precision_from_string(precision)) throw ConfigError("precision must be f32 or f64");
    const auto act = activation_from_string(activation);
    if (!act || *act == Activation::identity_fn)
        throw ConfigError("activation must be tanh or logistic");
    if (dimension < 0) throw ConfigError("dimension must be non-negative");
    if (hidden1 < 0 || hidden2 < 0) throw ConfigError("hidden widths must be non-negative");
    if (eval_cadence < 0 || checkpoint_cadence < 0) throw ConfigError("cadences must be non-negative");
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be non-negative");
    if (eval_points < 0 || reference_samples < 0) throw ConfigError("evaluation sizes must be non-negative");
    if (!(bn_epsilon > 0.0)) throw ConfigError("bn_epsilon must be positive");
    if (!(bn_momentum > 0.0 && bn_momentum < 1.0)) throw ConfigError("bn_momentum must lie in (0, 1)");
    if (out_dir.empty()) throw ConfigError("output directory must not be empty");
}

} // namespace kolmo
