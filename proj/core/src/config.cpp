#include "drape/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace drape {

namespace {

struct Entry {
    const char* key;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&)> set;
    bool trajectory = true;  // part of the resume hash
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
T parse_number(const std::string& key, const std::string& s) {
    T v{};
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ValidationError("config: bad value for " + key + ": '" + s + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ValidationError("config: bad boolean for " + key + ": '" + s + "'");
}

template <typename T, typename Field>
Entry entry(const char* key, Field field, bool trajectory = true) {
    Entry e;
    e.key = key;
    e.get = [field](const Config& c) { return fmt(field(const_cast<Config&>(c))); };
    e.set = [field, key](Config& c, const std::string& s) {
        if constexpr (std::is_same_v<T, bool>) {
            field(c) = parse_bool(key, s);
        } else {
            field(c) = parse_number<T>(key, s);
        }
    };
    e.trajectory = trajectory;
    return e;
}

#define DRAPE_FIELD(expr) [](Config& c) -> auto& { return expr; }

const std::vector<Entry>& registry() {
    static const std::vector<Entry> r = [] {
        std::vector<Entry> e;
        e.push_back(entry<std::uint64_t>("seed", DRAPE_FIELD(c.data.seed)));
        e.push_back(entry<int>("views", DRAPE_FIELD(c.data.views)));
        e.push_back(entry<int>("poses", DRAPE_FIELD(c.data.poses)));
        e.push_back(entry<int>("resolution", DRAPE_FIELD(c.data.resolution)));
        e.push_back(entry<int>("subsample", DRAPE_FIELD(c.data.subsample)));
        e.push_back(entry<int>("uv_size", DRAPE_FIELD(c.data.uv_size)));
        e.push_back(entry<double>("jitter", DRAPE_FIELD(c.data.jitter)));
        e.push_back(entry<bool>("color_jitter", DRAPE_FIELD(c.data.color_jitter)));
        e.push_back(entry<double>("camera_radius", DRAPE_FIELD(c.data.camera_radius)));
        e.push_back(entry<double>("focal", DRAPE_FIELD(c.data.focal)));
        e.push_back(entry<int>("nld_hidden", DRAPE_FIELD(c.hidden)));
        e.push_back(entry<int>("nld_embedding", DRAPE_FIELD(c.embedding)));
        e.push_back(entry<double>("range_position", DRAPE_FIELD(c.ranges.position)));
        e.push_back(entry<double>("range_rotation", DRAPE_FIELD(c.ranges.rotation)));
        e.push_back(entry<double>("range_scale", DRAPE_FIELD(c.ranges.scale)));
        e.push_back(entry<double>("range_color", DRAPE_FIELD(c.ranges.color)));
        e.push_back(entry<double>("init_scale", DRAPE_FIELD(c.init_scale)));
        e.push_back(entry<double>("init_opacity", DRAPE_FIELD(c.init_opacity)));
        e.push_back(entry<double>("init_color", DRAPE_FIELD(c.init_color)));
        e.push_back(entry<double>("lambda_p", DRAPE_FIELD(c.weights.perceptual)));
        e.push_back(entry<double>("lambda_reg", DRAPE_FIELD(c.weights.reg)));
        e.push_back(entry<double>("lambda_adv", DRAPE_FIELD(c.weights.adv)));
        e.push_back(entry<double>("lambda_tv", DRAPE_FIELD(c.weights.tv)));
        e.push_back(entry<double>("lambda_mag", DRAPE_FIELD(c.weights.mag)));
        e.push_back(entry<double>("lr_branch_src", DRAPE_FIELD(c.optim[0].lr)));
        e.push_back(entry<double>("lr_branch_tar", DRAPE_FIELD(c.optim[1].lr)));
        e.push_back(entry<double>("lr_nld", DRAPE_FIELD(c.optim[2].lr)));
        e.push_back(entry<double>("lr_flows", DRAPE_FIELD(c.optim[3].lr)));
        e.push_back(entry<double>("lr_discriminator", DRAPE_FIELD(c.optim[4].lr)));
        e.push_back(entry<double>("adam_beta1", DRAPE_FIELD(c.optim[0].beta1)));
        e.push_back(entry<double>("adam_beta2", DRAPE_FIELD(c.optim[0].beta2)));
        e.push_back(entry<double>("adam_eps", DRAPE_FIELD(c.optim[0].eps)));
        e.push_back(entry<int>("warmup", DRAPE_FIELD(c.optim[0].warmup)));
        e.push_back(entry<int>("iterations", DRAPE_FIELD(c.iterations), false));
        e.push_back(entry<int>("checkpoint_every", DRAPE_FIELD(c.checkpoint_every), false));
        e.push_back(entry<int>("patches", DRAPE_FIELD(c.patches)));
        e.push_back(entry<int>("threads", DRAPE_FIELD(c.threads)));
        e.push_back(entry<bool>("enable_nld", DRAPE_FIELD(c.enable_nld)));
        e.push_back(entry<bool>("enable_rfr", DRAPE_FIELD(c.enable_rfr)));
        e.push_back(entry<bool>("enable_adv", DRAPE_FIELD(c.enable_adv)));
        return e;
    }();
    return r;
}

#undef DRAPE_FIELD

// beta1/beta2/eps/warmup are shared by all groups; the registry stores them
// on group 0 and this copies them across.
void share_adam(Config& c) {
    for (auto& s : c.optim) {
        s.beta1 = c.optim[0].beta1;
        s.beta2 = c.optim[0].beta2;
        s.eps = c.optim[0].eps;
        s.warmup = c.optim[0].warmup;
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& e : registry()) keys.emplace_back(e.key);
    return keys;
}

void Config::validate() const {
    data.validate();
    if (hidden < 1 || hidden > 1024) throw ValidationError("nld_hidden must be in [1, 1024]");
    if (embedding < 0 || embedding > 64) throw ValidationError("nld_embedding must be in [0, 64]");
    ranges.validate();
    if (!(init_scale > 0.0 && init_scale < 1.0)) throw ValidationError("init_scale must be in (0, 1)");
    if (!(init_opacity > 0.0 && init_opacity < 1.0)) throw ValidationError("init_opacity must be in (0, 1)");
    if (!(init_color > 0.0 && init_color < 1.0)) throw ValidationError("init_color must be in (0, 1)");
    weights.validate();
    for (const auto& s : optim) s.validate();
    if (iterations < 0) throw ValidationError("iterations must be >= 0");
    if (checkpoint_every < 0) throw ValidationError("checkpoint_every must be >= 0");
    if (patches < 1 || patches > 64) throw ValidationError("patches must be in [1, 64]");
    if (threads < 0) throw ValidationError("threads must be >= 0");
}

std::string Config::to_text() const {
    std::ostringstream s;
    for (const auto& e : registry()) s << e.key << '=' << e.get(*this) << '\n';
    return s.str();
}

std::uint64_t Config::hash() const {
    std::string text;
    for (const auto& e : registry()) {
        if (!e.trajectory) continue;
        text += e.key;
        text += '=';
        text += e.get(*this);
        text += '\n';
    }
    return fnv1a64(text);
}

void set_config_value(Config& config, const std::string& key, const std::string& value) {
    for (const auto& e : registry()) {
        if (key == e.key) {
            e.set(config, value);
            share_adam(config);
            return;
        }
    }
    throw ValidationError("config: unknown key '" + key + "'");
}

Config parse_config(const std::string& text) {
    Config c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(number) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw ValidationError("config: repeated key '" + key + "'");
        set_config_value(c, key, value);
    }
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return parse_config(s.str());
}

Config apply_variant(Config config, const std::string& variant) {
    config.enable_nld = config.enable_rfr = config.enable_adv = true;
    if (variant == "full") return config;
    if (variant == "no_nld") {
        config.enable_nld = false;
    } else if (variant == "no_rfr") {
        config.enable_rfr = false;
    } else if (variant == "no_adv") {
        config.enable_adv = false;
    } else {
        throw ValidationError("unknown variant '" + variant + "' (full, no_nld, no_rfr, no_adv)");
    }
    return config;
}

std::string variant_name(const Config& c) {
    const int off = !c.enable_nld + !c.enable_rfr + !c.enable_adv;
    if (off == 0) return "full";
    if (off > 1) return "custom";
    if (!c.enable_nld) return "no_nld";
    if (!c.enable_rfr) return "no_rfr";
    return "no_adv";
}

}  // namespace drape
