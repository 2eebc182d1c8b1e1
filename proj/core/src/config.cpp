#include "holotrack/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "holotrack/csv.hpp"
#include "holotrack/error.hpp"

namespace holotrack {

std::string_view to_string(SegmenterKind k) {
    switch (k) {
        case SegmenterKind::oracle: return "oracle";
        case SegmenterKind::focus: return "focus";
        case SegmenterKind::external: return "external";
    }
    return "oracle";
}

SegmenterKind parse_segmenter_kind(std::string_view name) {
    for (auto k : {SegmenterKind::oracle, SegmenterKind::focus, SegmenterKind::external}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown segmenter '" + std::string(name) + "' (expected oracle, focus or external)");
}

void PipelineConfig::validate() const {
    optics.validate();
    tile.validate();
    if (tile.tile > optics.nx || tile.tile > optics.ny) throw ConfigError("tile size exceeds the sensor dimensions");
    match.validate();
    if (!(binarize_threshold >= 0.0 && binarize_threshold < 1.0)) {
        throw ConfigError("binarize_threshold must lie in [0, 1)");
    }
    focus.validate();
    corruption.validate();
    sizes.validate();
    if (n_particles < 0) throw ConfigError("n_particles must be >= 0");
    if (n_negatives < 0) throw ConfigError("n_negatives must be >= 0");
    if (!(frac_near_focus >= 0.0 && frac_near_focus <= 1.0)) throw ConfigError("frac_near_focus must lie in [0, 1]");
    if (split.n_train < 0 || split.n_valid < 0 || split.n_test < 0) throw ConfigError("split counts must be >= 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(render.background_level > 0.0)) throw ConfigError("background_level must be > 0");
}

PipelineOptions PipelineConfig::pipeline_options() const {
    PipelineOptions o;
    o.tile = tile;
    o.dedup_tiles = dedup_tiles;
    o.match = match;
    o.binarize_threshold = binarize_threshold;
    o.hologram_transform = hologram_transform;
    o.tile_transform = tile_transform;
    o.workers = workers;
    return o;
}

namespace {

enum class ValueKind { string, integer, floating, boolean };

struct Value {
    ValueKind kind = ValueKind::string;
    std::string text;  // unquoted string or numeric literal
    bool flag = false;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

Value parse_value(std::string_view raw, bool allow_bare, const std::string& where) {
    std::string s = trim(raw);
    if (s.empty()) throw ConfigError(where + ": missing value");
    Value v;
    if (s.front() == '"') {
        std::string out;
        std::size_t i = 1;
        for (; i < s.size() && s[i] != '"'; ++i) {
            if (s[i] == '\\' && i + 1 < s.size()) {
                const char c = s[++i];
                out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
            } else {
                out += s[i];
            }
        }
        if (i >= s.size()) throw ConfigError(where + ": unterminated string");
        const auto rest = trim(std::string_view(s).substr(i + 1));
        if (!rest.empty() && rest.front() != '#') throw ConfigError(where + ": trailing characters after string");
        v.text = out;
        return v;
    }
    if (const auto hash = s.find('#'); hash != std::string::npos) s = trim(std::string_view(s).substr(0, hash));
    if (s == "true" || s == "false") {
        v.kind = ValueKind::boolean;
        v.flag = s == "true";
        return v;
    }
    std::string digits;
    for (char c : s) {
        if (c != '_') digits += c;
    }
    long long iv = 0;
    auto ri = std::from_chars(digits.data(), digits.data() + digits.size(), iv);
    if (ri.ec == std::errc{} && ri.ptr == digits.data() + digits.size()) {
        v.kind = ValueKind::integer;
        v.text = digits;
        return v;
    }
    double dv = 0.0;
    auto rd = std::from_chars(digits.data(), digits.data() + digits.size(), dv);
    if (rd.ec == std::errc{} && rd.ptr == digits.data() + digits.size()) {
        v.kind = ValueKind::floating;
        v.text = digits;
        return v;
    }
    if (allow_bare) {
        v.text = s;
        return v;
    }
    throw ConfigError(where + ": cannot parse value '" + s + "'");
}

double as_double(const Value& v, const std::string& key) {
    if (v.kind != ValueKind::integer && v.kind != ValueKind::floating) throw ConfigError(key + ": expected a number");
    double d = 0.0;
    std::from_chars(v.text.data(), v.text.data() + v.text.size(), d);
    return d;
}

long long as_int(const Value& v, const std::string& key) {
    if (v.kind != ValueKind::integer) throw ConfigError(key + ": expected an integer");
    long long i = 0;
    std::from_chars(v.text.data(), v.text.data() + v.text.size(), i);
    return i;
}

bool as_bool(const Value& v, const std::string& key) {
    if (v.kind != ValueKind::boolean) throw ConfigError(key + ": expected true or false");
    return v.flag;
}

const std::string& as_string(const Value& v, const std::string& key) {
    if (v.kind != ValueKind::string) throw ConfigError(key + ": expected a string");
    return v.text;
}

std::string toml_double(double d) {
    auto s = csv::format_number(d);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string toml_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out + "\"";
}

struct Field {
    const char* section;
    const char* key;
    std::function<std::string(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const Value&, const std::string&)> set;
};

#define HT_DOUBLE(sec, name, member)                                                                   \
    Field {                                                                                            \
        sec, name, [](const PipelineConfig& c) { return toml_double(c.member); },                      \
            [](PipelineConfig& c, const Value& v, const std::string& k) { c.member = as_double(v, k); } \
    }
#define HT_INT(sec, name, member)                                                                        \
    Field {                                                                                              \
        sec, name, [](const PipelineConfig& c) { return std::to_string(c.member); },                     \
            [](PipelineConfig& c, const Value& v, const std::string& k) {                                \
                c.member = static_cast<decltype(c.member)>(as_int(v, k));                                \
            }                                                                                            \
    }
#define HT_BOOL(sec, name, member)                                                                  \
    Field {                                                                                         \
        sec, name, [](const PipelineConfig& c) { return std::string(c.member ? "true" : "false"); }, \
            [](PipelineConfig& c, const Value& v, const std::string& k) { c.member = as_bool(v, k); } \
    }
#define HT_STRING(sec, name, member)                                                                 \
    Field {                                                                                          \
        sec, name, [](const PipelineConfig& c) { return toml_string(c.member); },                    \
            [](PipelineConfig& c, const Value& v, const std::string& k) { c.member = as_string(v, k); } \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        HT_DOUBLE("optics", "wavelength_um", optics.wavelength),
        HT_DOUBLE("optics", "dx_um", optics.dx),
        HT_DOUBLE("optics", "dy_um", optics.dy),
        HT_INT("optics", "nx", optics.nx),
        HT_INT("optics", "ny", optics.ny),
        HT_DOUBLE("optics", "z_min_um", optics.z_min),
        HT_DOUBLE("optics", "z_max_um", optics.z_max),
        HT_INT("optics", "n_planes", optics.n_planes),

        HT_INT("tiling", "tile", tile.tile),
        HT_INT("tiling", "step", tile.step),
        HT_BOOL("tiling", "dedup", dedup_tiles),

        HT_DOUBLE("match", "threshold_um", match.threshold),
        HT_DOUBLE("match", "weight_x", match.weights[0]),
        HT_DOUBLE("match", "weight_y", match.weights[1]),
        HT_DOUBLE("match", "weight_z", match.weights[2]),
        HT_DOUBLE("match", "weight_d", match.weights[3]),

        Field{"segmenter", "kind", [](const PipelineConfig& c) { return toml_string(std::string(to_string(c.segmenter))); },
              [](PipelineConfig& c, const Value& v, const std::string& k) {
                  c.segmenter = parse_segmenter_kind(as_string(v, k));
              }},
        HT_DOUBLE("segmenter", "binarize_threshold", binarize_threshold),
        HT_DOUBLE("segmenter", "amp_thresh", focus.amp_thresh),
        HT_INT("segmenter", "min_px", focus.min_px),
        HT_STRING("segmenter", "manifest", mask_manifest),
        HT_STRING("segmenter", "truth_csv", truth_csv),

        Field{"transforms", "value_transform",
              [](const PipelineConfig& c) { return toml_string(std::string(to_string(c.tile_transform))); },
              [](PipelineConfig& c, const Value& v, const std::string& k) {
                  c.tile_transform = parse_value_transform(as_string(v, k));
              }},
        Field{"transforms", "hologram_transform",
              [](const PipelineConfig& c) { return toml_string(std::string(to_string(c.hologram_transform))); },
              [](PipelineConfig& c, const Value& v, const std::string& k) {
                  c.hologram_transform = parse_value_transform(as_string(v, k));
              }},
        HT_DOUBLE("transforms", "blur_sigma_max", corruption.blur_sigma_max),
        HT_DOUBLE("transforms", "noise_sigma_max", corruption.noise_sigma_max),
        HT_DOUBLE("transforms", "brightness_max", corruption.brightness_max),
        HT_DOUBLE("transforms", "flip_prob", corruption.flip_prob),

        HT_INT("simulate", "n_particles", n_particles),
        HT_DOUBLE("simulate", "gamma_shape", sizes.shape),
        HT_DOUBLE("simulate", "gamma_scale_um", sizes.scale),
        HT_DOUBLE("simulate", "d_floor_um", sizes.d_floor),
        HT_DOUBLE("simulate", "d_cap_um", sizes.d_cap),
        Field{"simulate", "render_mode",
              [](const PipelineConfig& c) {
                  return toml_string(c.render.mode == RenderMode::superposition ? "superposition" : "sequential");
              },
              [](PipelineConfig& c, const Value& v, const std::string& k) {
                  const auto& s = as_string(v, k);
                  if (s == "superposition") c.render.mode = RenderMode::superposition;
                  else if (s == "sequential") c.render.mode = RenderMode::sequential;
                  else throw ConfigError(k + ": expected superposition or sequential");
              }},
        HT_DOUBLE("simulate", "background_level", render.background_level),
        HT_INT("simulate", "n_train", split.n_train),
        HT_INT("simulate", "n_valid", split.n_valid),
        HT_INT("simulate", "n_test", split.n_test),
        HT_INT("simulate", "n_negatives", n_negatives),
        HT_DOUBLE("simulate", "frac_near_focus", frac_near_focus),

        HT_INT("run", "workers", workers),
        Field{"run", "seed", [](const PipelineConfig& c) { return std::to_string(c.seed); },
              [](PipelineConfig& c, const Value& v, const std::string& k) {
                  const auto i = as_int(v, k);
                  if (i < 0) throw ConfigError(k + ": seed must be >= 0");
                  c.seed = static_cast<std::uint64_t>(i);
                  c.split.seed = c.seed;
              }},
    };
    return table;
}

#undef HT_DOUBLE
#undef HT_INT
#undef HT_BOOL
#undef HT_STRING

const Field& find_field(const std::string& section, const std::string& key, const std::string& where) {
    for (const auto& f : fields()) {
        if (section == f.section && key == f.key) return f;
    }
    throw ConfigError(where + ": unknown key '" + (section.empty() ? key : section + "." + key) + "'");
}

}  // namespace

PipelineConfig parse_config(std::string_view toml) {
    PipelineConfig cfg;
    std::istringstream in{std::string(toml)};
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = "config line " + std::to_string(lineno);
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.front() == '[') {
            const auto close = t.find(']');
            if (close == std::string::npos) throw ConfigError(where + ": malformed section header");
            section = trim(std::string_view(t).substr(1, close - 1));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const auto key = trim(std::string_view(t).substr(0, eq));
        const auto& f = find_field(section, key, where);
        f.set(cfg, parse_value(std::string_view(t).substr(eq + 1), false, where), section + "." + key);
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void apply_override(PipelineConfig& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    const auto name = trim(assignment.substr(0, eq == std::string_view::npos ? 0 : eq));
    const auto dot = name.find('.');
    if (eq == std::string_view::npos || dot == std::string::npos) {
        throw ConfigError("override '" + std::string(assignment) + "' must look like section.key=value");
    }
    const std::string section = name.substr(0, dot), key = name.substr(dot + 1);
    const std::string where = "override " + name;
    const auto& f = find_field(section, key, where);
    f.set(cfg, parse_value(assignment.substr(eq + 1), true, where), name);
}

std::string to_toml(const PipelineConfig& cfg) {
    std::string out, section;
    for (const auto& f : fields()) {
        if (section != f.section) {
            if (!out.empty()) out += '\n';
            section = f.section;
            out += "[" + section + "]\n";
        }
        out += std::string(f.key) + " = " + f.get(cfg) + "\n";
    }
    return out;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string config_hash(const PipelineConfig& cfg) { return fnv1a_hex(to_toml(cfg)); }

}  // namespace holotrack
