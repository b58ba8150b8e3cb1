#include "texpaint/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace texpaint {

namespace {

Error config_error(const std::string &key, const std::string &what) { return Error("config", key + ": " + what); }

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    return out;
}

template <typename T> T parse_number(const std::string &key, const std::string &text, const char *kind) {
    const std::string s = trim(text);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw config_error(key, std::string("expected ") + kind + ", got '" + text + "'");
    return value;
}

int to_int(const std::string &key, const std::string &v) { return parse_number<int>(key, v, "an integer"); }
double to_double(const std::string &key, const std::string &v) { return parse_number<double>(key, v, "a number"); }
std::uint64_t to_u64(const std::string &key, const std::string &v) { return parse_number<std::uint64_t>(key, v, "a non-negative integer"); }

bool to_bool(const std::string &key, const std::string &v) {
    const std::string s = trim(v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw config_error(key, "expected a boolean, got '" + v + "'");
}

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <typename T> std::string join(const std::vector<T> &items, const char *sep) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) out << (i ? sep : "") << items[i];
    return out.str();
}

struct Key {
    std::string section;
    std::string name;
    std::function<std::string(const RunConfig &)> get;
    std::function<void(RunConfig &, const std::string &key, const std::string &value)> set;
    std::string canonical() const { return section + "." + name; }
};

#define TP_INT(field) [](const RunConfig &c) { return std::to_string(c.field); }, [](RunConfig &c, const std::string &k, const std::string &v) { c.field = to_int(k, v); }
#define TP_DOUBLE(field) [](const RunConfig &c) { return fmt(c.field); }, [](RunConfig &c, const std::string &k, const std::string &v) { c.field = to_double(k, v); }

const std::vector<Key> &keys() {
    static const std::vector<Key> table = {
        {"run", "preset", [](const RunConfig &c) { return c.preset; }, [](RunConfig &, const std::string &, const std::string &) {}},
        {"run", "mesh", [](const RunConfig &c) { return c.mesh; }, [](RunConfig &c, const std::string &, const std::string &v) { c.mesh = trim(v); }},
        {"run", "prompts", [](const RunConfig &c) { return join(c.prompts, " | "); },
         [](RunConfig &c, const std::string &, const std::string &v) { c.prompts = split(v, '|'); }},
        {"run", "camera_prompts", [](const RunConfig &c) { return join(c.camera_prompts, ","); },
         [](RunConfig &c, const std::string &k, const std::string &v) {
             c.camera_prompts.clear();
             if (trim(v).empty()) return;
             for (const auto &p : split(v, ',')) c.camera_prompts.push_back(to_int(k, p));
         }},
        {"run", "variant", [](const RunConfig &c) { return to_string(c.variant); },
         [](RunConfig &c, const std::string &k, const std::string &v) {
             try {
                 c.variant = parse_variant(trim(v));
             } catch (const Error &) {
                 throw config_error(k, "unknown variant '" + v + "'");
             }
         }},
        {"run", "background", [](const RunConfig &c) { return fmt(c.background.r) + "," + fmt(c.background.g) + "," + fmt(c.background.b); },
         [](RunConfig &c, const std::string &k, const std::string &v) {
             const auto parts = split(v, ',');
             if (parts.size() != 3) throw config_error(k, "expected r,g,b");
             c.background = {to_double(k, parts[0]), to_double(k, parts[1]), to_double(k, parts[2])};
         }},
        {"run", "threads", TP_INT(workers)},
        {"camera", "cameras", TP_INT(cameras)},
        {"camera", "radius", TP_DOUBLE(radius)},
        {"camera", "pitch", TP_DOUBLE(pitch_deg)},
        {"camera", "fov", TP_DOUBLE(fov_deg)},
        {"resolution", "image_size", TP_INT(image_size)},
        {"resolution", "latent_size", [](const RunConfig &c) { return std::to_string(c.latent.height); },
         [](RunConfig &c, const std::string &k, const std::string &v) { c.latent.height = c.latent.width = to_int(k, v); }},
        {"resolution", "latent_channels", TP_INT(latent.channels)},
        {"resolution", "texture_size", TP_INT(texture_size)},
        {"schedule", "train_steps", TP_INT(train_steps)},
        {"schedule", "beta_min", TP_DOUBLE(beta_min)},
        {"schedule", "beta_max", TP_DOUBLE(beta_max)},
        {"schedule", "steps", TP_INT(steps)},
        {"schedule", "eta", TP_DOUBLE(eta)},
        {"backend", "predictor", [](const RunConfig &c) { return to_string(c.predictor); },
         [](RunConfig &c, const std::string &k, const std::string &v) {
             const std::string s = trim(v);
             if (s == "toy") c.predictor = PredictorKind::Toy;
             else if (s == "oracle") c.predictor = PredictorKind::Oracle;
             else throw config_error(k, "expected toy or oracle, got '" + v + "'");
         }},
        {"backend", "codec", [](const RunConfig &c) { return to_string(c.codec); },
         [](RunConfig &c, const std::string &k, const std::string &v) {
             const std::string s = trim(v);
             if (s == "identity") c.codec = CodecKind::Identity;
             else if (s == "affine") c.codec = CodecKind::Affine;
             else if (s == "nonlinear") c.codec = CodecKind::Nonlinear;
             else throw config_error(k, "expected identity, affine or nonlinear, got '" + v + "'");
         }},
        {"backend", "base_seed", [](const RunConfig &c) { return std::to_string(c.base_seed); },
         [](RunConfig &c, const std::string &k, const std::string &v) { c.base_seed = to_u64(k, v); }},
        {"backend", "guidance", TP_DOUBLE(guidance)},
        {"backend", "oracle_targets", [](const RunConfig &c) { return join(c.oracle_targets, " | "); },
         [](RunConfig &c, const std::string &, const std::string &v) { c.oracle_targets = split(v, '|'); }},
        {"optim", "adam_iterations", TP_INT(adam.iterations)},
        {"optim", "adam_lr", TP_DOUBLE(adam.lr)},
        {"optim", "adam_beta1", TP_DOUBLE(adam.beta1)},
        {"optim", "adam_beta2", TP_DOUBLE(adam.beta2)},
        {"optim", "adam_eps", TP_DOUBLE(adam.eps)},
        {"optim", "weight_decay", TP_DOUBLE(adam.weight_decay)},
        {"optim", "sgd_iterations", TP_INT(sgd.iterations)},
        {"optim", "sgd_lr", TP_DOUBLE(sgd.lr)},
        {"optim", "joint", [](const RunConfig &c) { return std::string(c.joint ? "true" : "false"); },
         [](RunConfig &c, const std::string &k, const std::string &v) { c.joint = to_bool(k, v); }},
        {"optim", "joint_rounds", TP_INT(joint_rounds)},
    };
    return table;
}

#undef TP_INT
#undef TP_DOUBLE

const Key &find_key(const std::string &raw) {
    const std::string key = trim(raw);
    const Key *match = nullptr;
    int count = 0;
    for (const Key &k : keys()) {
        if (k.canonical() == key) return k;
        if (k.name == key) {
            match = &k;
            ++count;
        }
    }
    if (count == 1) return *match;
    if (count > 1) throw config_error(key, "ambiguous key, use section.key");
    throw config_error(key, "unknown key");
}

std::vector<std::pair<std::string, std::string>> flatten(const boost::property_tree::ptree &pt) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &[name, node] : pt) {
        if (node.empty()) {
            out.emplace_back(name, node.data());
            continue;
        }
        for (const auto &[sub, leaf] : node) out.emplace_back(name + "." + sub, leaf.data());
    }
    return out;
}

std::pair<std::string, std::string> split_override(const std::string &text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw config_error(trim(text), "override must be key=value");
    return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

} // namespace

std::vector<std::string> preset_names() { return {"desk", "paper-scale", "oracle"}; }

RunConfig preset_config(const std::string &name) {
    RunConfig c;
    if (name == "desk") return c;
    if (name == "paper-scale") {
        c.preset = name;
        c.cameras = 8;
        c.radius = 1.5;
        c.fov_deg = 45.0;
        c.pitch_deg = 30.0;
        c.steps = 35;
        c.adam.iterations = 20;
        c.adam.lr = 0.01;
        c.sgd.iterations = 500;
        c.image_size = 512;
        c.latent = {64, 64, 4};
        c.texture_size = 1024;
        c.codec = CodecKind::Affine;
        return c;
    }
    if (name == "oracle") {
        c.preset = name;
        c.predictor = PredictorKind::Oracle;
        c.codec = CodecKind::Identity;
        c.latent = {c.image_size, c.image_size, 3};
        c.oracle_targets = {"smooth"};
        return c;
    }
    throw config_error("run.preset", "unknown preset '" + name + "'");
}

RunConfig parse_config_text(const std::string &text, const std::vector<std::string> &overrides) {
    boost::property_tree::ptree pt;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error &e) {
        throw Error("config", "line " + std::to_string(e.line()) + ": " + e.message());
    }
    std::vector<std::pair<const Key *, std::string>> assignments;
    for (const auto &[k, v] : flatten(pt)) assignments.emplace_back(&find_key(k), v);
    for (const auto &o : overrides) {
        const auto [k, v] = split_override(o);
        assignments.emplace_back(&find_key(k), v);
    }

    std::string preset = "desk";
    for (const auto &[k, v] : assignments)
        if (k->name == "preset") preset = trim(v);
    RunConfig cfg = preset_config(preset);
    bool latent_given = false;
    for (const auto &[k, v] : assignments) {
        k->set(cfg, k->canonical(), v);
        latent_given = latent_given || k->name == "latent_size" || k->name == "latent_channels";
    }
    // The identity codec ties the latent to the image unless set explicitly.
    if (cfg.codec == CodecKind::Identity && !latent_given) cfg.latent = {cfg.image_size, cfg.image_size, 3};
    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::filesystem::path &path, const std::vector<std::string> &overrides) {
    if (path.empty()) return parse_config_text("", overrides);
    std::ifstream in(path);
    if (!in) throw Error("config", "cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), overrides);
}

std::string config_echo(const RunConfig &cfg) {
    std::ostringstream out;
    std::string section;
    for (const Key &k : keys()) {
        if (k.section != section) {
            if (!section.empty()) out << '\n';
            section = k.section;
            out << '[' << section << "]\n";
        }
        out << k.name << " = " << k.get(cfg) << '\n';
    }
    return out.str();
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const Key &k : keys()) out.push_back(k.canonical());
    return out;
}

} // namespace texpaint
