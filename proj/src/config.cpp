#include "opgame/config.hpp"

#include "opgame/csv.hpp"
#include "opgame/errors.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace opgame {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

class KeyValueReader {
public:
    explicit KeyValueReader(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError(lineno, "config: expected 'key = value' on line " +
                                             std::to_string(lineno));
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ParseError(lineno, "config: empty key on line " + std::to_string(lineno));
            }
            values_[key] = value;
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return it->second;
    }

    std::string require_string(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) {
            throw std::invalid_argument("config: missing required key '" + key + "'");
        }
        used_.insert(key);
        return it->second;
    }

    double get_double(const std::string& key, double fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return parse_double(it->second);
    }

    int get_int(const std::string& key, int fallback) {
        return static_cast<int>(get_double(key, fallback));
    }

    bool get_bool(const std::string& key, bool fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw std::invalid_argument("config: key '" + key + "' must be true or false");
    }

    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        used_.insert(key);
        return parse_list(it->second, key);
    }

    std::vector<double> require_list(const std::string& key) {
        return parse_list(require_string(key), key);
    }

    void reject_unused() const {
        std::vector<std::string> unknown;
        for (const auto& [key, value] : values_) {
            if (!used_.count(key)) unknown.push_back(key);
        }
        if (!unknown.empty()) {
            std::string msg = "config: unknown keys:";
            for (const auto& k : unknown) msg += " '" + k + "'";
            throw std::invalid_argument(msg);
        }
    }

private:
    static std::vector<double> parse_list(const std::string& raw, const std::string& key) {
        std::vector<double> out;
        std::stringstream ss(raw);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell = trim(cell);
            if (cell.empty()) {
                throw std::invalid_argument("config: empty element in list '" + key + "'");
            }
            out.push_back(parse_double(cell));
        }
        if (out.empty()) {
            throw std::invalid_argument("config: empty list for key '" + key + "'");
        }
        return out;
    }

    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

// 1 value -> v*I, d values -> diagonal, d*d values -> full (row-major).
Mat parse_matrix(const std::vector<double>& vals, int d, const std::string& key) {
    if (vals.size() == 1) {
        return vals[0] * Mat::Identity(d, d);
    }
    if (static_cast<int>(vals.size()) == d) {
        Mat m = Mat::Zero(d, d);
        for (int i = 0; i < d; ++i) m(i, i) = vals[i];
        return m;
    }
    if (static_cast<int>(vals.size()) == d * d) {
        Mat m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = vals[i * d + j];
        return m;
    }
    throw std::invalid_argument("config: '" + key + "' must hold 1, d, or d*d values");
}

Vec to_vec(const std::vector<double>& vals) {
    Vec v(static_cast<int>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) v(static_cast<int>(i)) = vals[i];
    return v;
}

PlayerCostConfig parse_cost(KeyValueReader& kv, const std::string& prefix, int d,
                            GoalMode default_mode) {
    PlayerCostConfig cost;
    cost.q_dim = parse_matrix(kv.get_list(prefix + ".q", {1.0}), d, prefix + ".q");
    cost.r = parse_matrix(kv.get_list(prefix + ".r", {1.0}), d, prefix + ".r");
    const std::string goal = kv.get_string(prefix + ".goal", "");
    if (goal == "initial") {
        cost.goal_mode = GoalMode::initial_centers;
    } else if (!goal.empty()) {
        cost.goal_mode = GoalMode::fixed_point;
        cost.goal_point = to_vec(kv.require_list(prefix + ".goal"));
        if (cost.goal_point.size() != d) {
            throw std::invalid_argument("config: '" + prefix + ".goal' needs " +
                                        std::to_string(d) + " coordinates");
        }
    } else {
        cost.goal_mode = default_mode;
        if (default_mode == GoalMode::fixed_point) cost.goal_point = Vec::Zero(d);
    }
    return cost;
}

std::string render_list(const std::vector<double>& vals) {
    std::string out;
    for (size_t i = 0; i < vals.size(); ++i) {
        if (i) out += ", ";
        out += format_double(vals[i]);
    }
    return out;
}

std::string render_matrix(const Mat& m) {
    std::vector<double> vals;
    const int d = static_cast<int>(m.rows());
    bool diagonal = true;
    for (int i = 0; i < d && diagonal; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j && m(i, j) != 0.0) diagonal = false;
    if (diagonal) {
        for (int i = 0; i < d; ++i) vals.push_back(m(i, i));
    } else {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) vals.push_back(m(i, j));
    }
    return render_list(vals);
}

std::string render_vec(const Vec& v) {
    std::vector<double> vals(v.data(), v.data() + v.size());
    return render_list(vals);
}

} // namespace

void ExperimentConfig::validate() const {
    if (dim < 1) {
        throw std::invalid_argument("config: opinion dimension must be >= 1");
    }
    kernel.validate();
    dynamics.validate();
    cost_adversary.validate(dim);
    cost_defender.validate(dim);
    solver.validate();
    clustering.validate();
    if (seeds.empty()) {
        throw std::invalid_argument("config: need at least one seed");
    }
    for (double s : sigma_grid) {
        if (!(s > 0.0)) {
            throw std::invalid_argument("config: sigma grid values must be positive");
        }
    }
    if (std::holds_alternative<SyntheticNetworkSpec>(network)) {
        const auto& syn = std::get<SyntheticNetworkSpec>(network);
        if (syn.n < 2) {
            throw std::invalid_argument("config: network.n must be >= 2");
        }
        if (syn.components.empty()) {
            throw std::invalid_argument("config: synthetic network needs components");
        }
    } else {
        const auto& el = std::get<EdgeListNetworkSpec>(network);
        if (el.path.empty()) {
            throw std::invalid_argument("config: network.edgelist path is empty");
        }
        if (el.embed_iterations < 1) {
            throw std::invalid_argument("config: network.embed_iterations must be >= 1");
        }
    }
}

ExperimentConfig parse_config_text(const std::string& text) {
    KeyValueReader kv(text);
    ExperimentConfig cfg;

    const std::string type = kv.get_string("network.type", "synthetic");
    if (type == "synthetic") {
        SyntheticNetworkSpec syn;
        syn.n = kv.get_int("network.n", 300);
        const int count = kv.get_int("network.components", 1);
        for (int c = 0; c < count; ++c) {
            const std::string prefix = "network.component." + std::to_string(c);
            MixtureComponent comp;
            comp.mean = to_vec(kv.require_list(prefix + ".mean"));
            const int d = static_cast<int>(comp.mean.size());
            comp.covariance =
                parse_matrix(kv.get_list(prefix + ".cov", {1.0}), d, prefix + ".cov");
            comp.fraction = kv.get_double(prefix + ".fraction", 1.0 / count);
            syn.components.push_back(std::move(comp));
        }
        cfg.dim = static_cast<int>(syn.components.front().mean.size());
        cfg.network = std::move(syn);
    } else if (type == "edgelist") {
        EdgeListNetworkSpec el;
        el.path = kv.require_string("network.edgelist");
        el.embed_iterations = kv.get_int("network.embed_iterations", 100);
        cfg.dim = 2;  // force-directed embeddings are 2-D
        cfg.network = std::move(el);
    } else {
        throw std::invalid_argument("config: network.type must be synthetic or edgelist");
    }

    cfg.kernel.sigma = kv.get_double("kernel.sigma", 1.0);

    cfg.dynamics.alpha = kv.get_double("dynamics.alpha", 0.3);
    cfg.dynamics.kappa_a = kv.get_double("dynamics.kappa_a", 0.5);
    cfg.dynamics.kappa_d = kv.get_double("dynamics.kappa_d", 0.5);
    cfg.dynamics.lambda = kv.get_double("dynamics.lambda", 0.7);
    cfg.dynamics.eta = kv.get_double("dynamics.eta", 0.5);
    cfg.dynamics.sigmoid_gain = kv.get_double("dynamics.sigmoid_gain", 1.0);
    cfg.dynamics.clamp_rate = kv.get_bool("dynamics.clamp_rate", true);

    cfg.cost_adversary = parse_cost(kv, "cost.adversary", cfg.dim, GoalMode::fixed_point);
    cfg.cost_defender = parse_cost(kv, "cost.defender", cfg.dim, GoalMode::initial_centers);

    cfg.solver.horizon = kv.get_int("solver.horizon", 5);
    cfg.solver.max_level = kv.get_int("solver.max_level", 10);
    cfg.solver.fd_step = kv.get_double("solver.fd_step", 1e-5);
    cfg.solver.replan_interval = kv.get_int("solver.replan_interval", 1);
    cfg.solver.total_steps = kv.get_int("solver.steps", 30);
    cfg.solver.reroll_each_level = kv.get_bool("solver.reroll_each_level", true);
    if (kv.has("solver.u0_adversary")) {
        cfg.solver.initial_message_adversary = to_vec(kv.require_list("solver.u0_adversary"));
    }
    if (kv.has("solver.u0_defender")) {
        cfg.solver.initial_message_defender = to_vec(kv.require_list("solver.u0_defender"));
    }

    cfg.clustering.m0 = kv.get_int("clustering.m0", 20);
    cfg.clustering.split_threshold = kv.get_double("clustering.split_threshold", 0.55);
    cfg.clustering.merge_epsilon = kv.get_double("clustering.merge_epsilon", 1e-9);
    cfg.clustering.mass_weighted = kv.get_bool("clustering.mass_weighted", false);

    const auto seed_list = kv.get_list("seeds", {1.0});
    cfg.seeds.clear();
    for (double s : seed_list) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    cfg.sigma_grid = kv.get_list("sigma_grid", {cfg.kernel.sigma});
    cfg.output_dir = kv.get_string("output_dir", "out");

    kv.reject_unused();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("load_config: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    if (std::holds_alternative<SyntheticNetworkSpec>(cfg.network)) {
        const auto& syn = std::get<SyntheticNetworkSpec>(cfg.network);
        out << "network.type = synthetic\n";
        out << "network.n = " << syn.n << "\n";
        out << "network.components = " << syn.components.size() << "\n";
        for (size_t c = 0; c < syn.components.size(); ++c) {
            const auto& comp = syn.components[c];
            out << "network.component." << c << ".mean = " << render_vec(comp.mean) << "\n";
            out << "network.component." << c << ".cov = " << render_matrix(comp.covariance)
                << "\n";
            out << "network.component." << c
                << ".fraction = " << format_double(comp.fraction) << "\n";
        }
    } else {
        const auto& el = std::get<EdgeListNetworkSpec>(cfg.network);
        out << "network.type = edgelist\n";
        out << "network.edgelist = " << el.path << "\n";
        out << "network.embed_iterations = " << el.embed_iterations << "\n";
    }

    out << "kernel.sigma = " << format_double(cfg.kernel.sigma) << "\n";

    out << "dynamics.alpha = " << format_double(cfg.dynamics.alpha) << "\n";
    out << "dynamics.kappa_a = " << format_double(cfg.dynamics.kappa_a) << "\n";
    out << "dynamics.kappa_d = " << format_double(cfg.dynamics.kappa_d) << "\n";
    out << "dynamics.lambda = " << format_double(cfg.dynamics.lambda) << "\n";
    out << "dynamics.eta = " << format_double(cfg.dynamics.eta) << "\n";
    out << "dynamics.sigmoid_gain = " << format_double(cfg.dynamics.sigmoid_gain) << "\n";
    out << "dynamics.clamp_rate = " << (cfg.dynamics.clamp_rate ? "true" : "false") << "\n";

    const auto render_cost = [&](const std::string& prefix, const PlayerCostConfig& cost) {
        out << prefix << ".q = " << render_matrix(cost.q_dim) << "\n";
        out << prefix << ".r = " << render_matrix(cost.r) << "\n";
        if (cost.goal_mode == GoalMode::initial_centers) {
            out << prefix << ".goal = initial\n";
        } else {
            out << prefix << ".goal = " << render_vec(cost.goal_point) << "\n";
        }
    };
    render_cost("cost.adversary", cfg.cost_adversary);
    render_cost("cost.defender", cfg.cost_defender);

    out << "solver.horizon = " << cfg.solver.horizon << "\n";
    out << "solver.max_level = " << cfg.solver.max_level << "\n";
    out << "solver.fd_step = " << format_double(cfg.solver.fd_step) << "\n";
    out << "solver.replan_interval = " << cfg.solver.replan_interval << "\n";
    out << "solver.steps = " << cfg.solver.total_steps << "\n";
    out << "solver.reroll_each_level = " << (cfg.solver.reroll_each_level ? "true" : "false")
        << "\n";
    if (cfg.solver.initial_message_adversary) {
        out << "solver.u0_adversary = " << render_vec(*cfg.solver.initial_message_adversary)
            << "\n";
    }
    if (cfg.solver.initial_message_defender) {
        out << "solver.u0_defender = " << render_vec(*cfg.solver.initial_message_defender)
            << "\n";
    }

    out << "clustering.m0 = " << cfg.clustering.m0 << "\n";
    out << "clustering.split_threshold = " << format_double(cfg.clustering.split_threshold)
        << "\n";
    out << "clustering.merge_epsilon = " << format_double(cfg.clustering.merge_epsilon)
        << "\n";
    out << "clustering.mass_weighted = " << (cfg.clustering.mass_weighted ? "true" : "false")
        << "\n";

    out << "seeds = ";
    for (size_t i = 0; i < cfg.seeds.size(); ++i) {
        if (i) out << ", ";
        out << cfg.seeds[i];
    }
    out << "\n";
    out << "sigma_grid = " << render_list(cfg.sigma_grid) << "\n";
    out << "output_dir = " << cfg.output_dir << "\n";
    return out.str();
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_config: cannot write '" + path + "'");
    }
    out << serialize_config(cfg);
}

} // namespace opgame
