#include "sfs/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sfs/format.hpp"
#include "sfs/gibbs_oracle.hpp"
#include "sfs/rng.hpp"

namespace sfs {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Source positions

SourceMap::SourceMap(std::string_view text)
{
    struct Frame
    {
        bool array = false;
        std::size_t index = 0;
        std::string key;
        bool expect_key = true;
    };
    std::vector<Frame> stack;
    int line = 1;

    auto escape = [](std::string const& key) {
        std::string out;
        for (char c : key)
        {
            if (c == '~')
            {
                out += "~0";
            }
            else if (c == '/')
            {
                out += "~1";
            }
            else
            {
                out += c;
            }
        }
        return out;
    };
    auto path = [&] {
        std::string p;
        for (auto const& f : stack)
        {
            p += "/" + (f.array ? std::to_string(f.index) : escape(f.key));
        }
        return p;
    };
    // Arrays record their elements when a value starts; objects record at the key.
    auto value_start = [&] {
        if (!stack.empty() && stack.back().array)
        {
            lines_.emplace(path(), line);
        }
    };

    lines_.emplace("", 1);
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        char const c = text[i];
        switch (c)
        {
        case '\n': ++line; break;
        case '{':
        case '[':
            value_start();
            stack.push_back({c == '[', 0, {}, c == '{'});
            break;
        case '}':
        case ']':
            if (!stack.empty())
            {
                stack.pop_back();
            }
            break;
        case ',':
            if (!stack.empty())
            {
                if (stack.back().array)
                {
                    ++stack.back().index;
                }
                else
                {
                    stack.back().expect_key = true;
                }
            }
            break;
        case ':':
            if (!stack.empty())
            {
                stack.back().expect_key = false;
            }
            break;
        case '"': {
            std::string s;
            for (++i; i < text.size() && text[i] != '"'; ++i)
            {
                if (text[i] == '\\' && i + 1 < text.size())
                {
                    ++i;
                }
                s += text[i];
            }
            if (!stack.empty() && !stack.back().array && stack.back().expect_key)
            {
                stack.back().key = s;
                lines_.emplace(path(), line);
            }
            else
            {
                value_start();
            }
            break;
        }
        default:
            if (c == '-' || (c >= '0' && c <= '9') || c == 't' || c == 'f' || c == 'n')
            {
                value_start();
                while (i + 1 < text.size() && std::string_view(",]}\n \t\r").find(text[i + 1]) == std::string_view::npos)
                {
                    ++i;
                }
            }
            break;
        }
    }
}

int SourceMap::line_of(std::string pointer) const
{
    while (true)
    {
        if (auto it = lines_.find(pointer); it != lines_.end())
        {
            return it->second;
        }
        if (pointer.empty())
        {
            return 1;
        }
        pointer.erase(pointer.rfind('/'));
    }
}

// ---------------------------------------------------------------------------
// Schema helpers

namespace {

struct Source
{
    std::string name;
    SourceMap const* map;

    [[noreturn]] void fail(std::string const& pointer, std::string const& message) const
    {
        std::string where = pointer.empty() ? "(root)" : pointer.substr(1);
        std::replace(where.begin(), where.end(), '/', '.');
        throw ConfigError(name + ":" + std::to_string(map->line_of(pointer)) + ": " + where + ": " + message);
    }
};

std::string describe(nlohmann::json const& j)
{
    return j.dump();
}

//! One JSON object of the config; every key must be read before finish().
class Node
{
  public:
    Node(nlohmann::json const& j, std::string pointer, Source const& src)
        : j_(j)
        , ptr_(std::move(pointer))
        , src_(src)
    {
        if (!j_.is_object())
        {
            src_.fail(ptr_, "expected an object");
        }
    }

    std::string const& pointer() const { return ptr_; }
    std::string at(std::string const& key) const { return ptr_ + "/" + key; }
    [[noreturn]] void fail(std::string const& key, std::string const& message) const
    {
        src_.fail(key.empty() ? ptr_ : at(key), message);
    }

    bool has(std::string const& key)
    {
        used_.insert(key);
        return j_.contains(key);
    }

    nlohmann::json const& raw(std::string const& key)
    {
        if (!has(key))
        {
            fail("", "missing required key \"" + key + "\"");
        }
        return j_.at(key);
    }

    double number(std::string const& key)
    {
        auto const& v = raw(key);
        if (!v.is_number())
        {
            fail(key, "expected a number, got " + describe(v));
        }
        return v.get<double>();
    }
    double number(std::string const& key, double fallback) { return has(key) ? number(key) : fallback; }
    std::optional<double> optional_number(std::string const& key)
    {
        return has(key) ? std::optional<double>(number(key)) : std::nullopt;
    }

    std::uint64_t count(std::string const& key)
    {
        auto const& v = raw(key);
        if (!v.is_number_unsigned())
        {
            fail(key, "expected a non-negative integer, got " + describe(v));
        }
        return v.get<std::uint64_t>();
    }
    std::uint64_t count(std::string const& key, std::uint64_t fallback) { return has(key) ? count(key) : fallback; }

    bool boolean(std::string const& key, bool fallback)
    {
        if (!has(key))
        {
            return fallback;
        }
        auto const& v = j_.at(key);
        if (!v.is_boolean())
        {
            fail(key, "expected true or false, got " + describe(v));
        }
        return v.get<bool>();
    }

    std::string string(std::string const& key)
    {
        auto const& v = raw(key);
        if (!v.is_string())
        {
            fail(key, "expected a string, got " + describe(v));
        }
        return v.get<std::string>();
    }
    std::string string(std::string const& key, std::string const& fallback)
    {
        return has(key) ? string(key) : fallback;
    }

    std::vector<double> numbers(std::string const& key)
    {
        auto const& v = raw(key);
        if (v.is_number())
        {
            return {v.get<double>()};
        }
        if (!v.is_array())
        {
            fail(key, "expected an array of numbers, got " + describe(v));
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (!v[i].is_number())
            {
                src_.fail(at(key) + "/" + std::to_string(i), "expected a number, got " + describe(v[i]));
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    std::vector<std::size_t> counts(std::string const& key)
    {
        auto const& v = raw(key);
        if (!v.is_array())
        {
            fail(key, "expected an array of integers, got " + describe(v));
        }
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (!v[i].is_number_unsigned())
            {
                src_.fail(at(key) + "/" + std::to_string(i), "expected a non-negative integer, got " + describe(v[i]));
            }
            out.push_back(v[i].get<std::size_t>());
        }
        return out;
    }

    Node child(std::string const& key) { return Node(raw(key), at(key), src_); }

    void finish() const
    {
        for (auto const& item : j_.items())
        {
            if (!used_.count(item.key()))
            {
                src_.fail(at(item.key()), "unknown key \"" + item.key() + "\"");
            }
        }
    }

  private:
    nlohmann::json const& j_;
    std::string ptr_;
    Source const& src_;
    std::set<std::string> used_;
};

void require_positive(Node& n, std::string const& key, double v)
{
    if (!(v > 0.0) || !std::isfinite(v))
    {
        n.fail(key, "must be positive and finite (got " + format_double(v) + ")");
    }
}

void require_sigma(Node& n, std::string const& key, double v)
{
    if (!(v > 0.0 && v <= 1.0))
    {
        n.fail(key, "sigma must lie in (0, 1] (got " + format_double(v) + ")");
    }
}

void require_at_least(Node& n, std::string const& key, std::uint64_t v, std::uint64_t lo)
{
    if (v < lo)
    {
        n.fail(key, "must be at least " + std::to_string(lo) + " (got " + std::to_string(v) + ")");
    }
}

PotentialSpec parse_potential(Node n)
{
    PotentialSpec s;
    s.name = n.string("name");
    if (s.name == "quadratic")
    {
        if (n.has("shift"))
        {
            s.shift = n.numbers("shift");
            s.dim = n.count("dim", s.shift.size());
            if (s.dim != s.shift.size())
            {
                n.fail("shift", "has " + std::to_string(s.shift.size()) + " entries but dim is "
                                    + std::to_string(s.dim));
            }
        }
        else
        {
            s.dim = n.count("dim");
            s.shift.assign(s.dim, 0.0);
        }
        s.smooth = false;
    }
    else if (s.name == "rastrigin")
    {
        s.dim = n.count("dim");
        s.B = n.number("B", 0.0);
        s.C = n.number("C", 0.0);
        s.smooth = n.boolean("smooth", true);
    }
    else if (s.name == "double_well")
    {
        s.dim = n.count("dim", 1);
        if (s.dim != 1)
        {
            n.fail("dim", "double_well is one-dimensional");
        }
        s.c1 = n.number("c1");
        s.c2 = n.number("c2");
        require_positive(n, "c1", s.c1);
        require_positive(n, "c2", s.c2);
        s.smooth = n.boolean("smooth", true);
    }
    else
    {
        n.fail("name", "unknown potential \"" + s.name + "\" (expected quadratic, rastrigin or double_well)");
    }
    require_at_least(n, "dim", s.dim, 1);
    if (s.smooth)
    {
        s.radius = n.optional_number("radius");
        s.delta = n.optional_number("delta");
        if (s.radius)
        {
            require_positive(n, "radius", *s.radius);
        }
        if (s.delta)
        {
            require_positive(n, "delta", *s.delta);
        }
    }
    n.finish();
    try
    {
        build_potential(s);
    }
    catch (std::invalid_argument const& e)
    {
        n.fail("", e.what());
    }
    return s;
}

SamplerConfig parse_sampler(Node n)
{
    auto const type = n.string("type");
    if (type == "sfs")
    {
        SfsConfig c;
        c.sigma = n.number("sigma");
        require_sigma(n, "sigma", c.sigma);
        c.K = n.count("K");
        require_at_least(n, "K", c.K, 1);
        c.m = n.count("m");
        require_at_least(n, "m", c.m, 1);
        auto const form = n.string("form", "gradient");
        try
        {
            c.form = parse_drift_form(form);
        }
        catch (std::invalid_argument const& e)
        {
            n.fail("form", e.what());
        }
        n.finish();
        try
        {
            validate(c);
        }
        catch (std::invalid_argument const& e)
        {
            n.fail("", e.what());
        }
        return c;
    }
    if (type == "langevin")
    {
        LangevinConfig c;
        c.sigma = n.number("sigma");
        require_sigma(n, "sigma", c.sigma);
        c.step = n.number("step");
        require_positive(n, "step", c.step);
        c.steps = n.count("steps");
        require_at_least(n, "steps", c.steps, 1);
        c.burn_in = n.count("burn_in", 0);
        if (c.burn_in >= c.steps)
        {
            n.fail("burn_in", "must be smaller than steps");
        }
        if (n.has("init"))
        {
            c.init = n.numbers("init");
        }
        c.init_box = n.number("init_box", 5.0);
        n.finish();
        try
        {
            validate(c);
        }
        catch (std::invalid_argument const& e)
        {
            n.fail("", e.what());
        }
        return c;
    }
    n.fail("type", "unknown sampler \"" + type + "\" (expected sfs or langevin)");
}

ConstantsSpec parse_constants(Node n)
{
    ConstantsSpec c;
    c.sigma = n.number("sigma");
    require_sigma(n, "sigma", c.sigma);
    c.options.grid_points_per_dim = n.count("grid_points_per_dim", c.options.grid_points_per_dim);
    require_at_least(n, "grid_points_per_dim", c.options.grid_points_per_dim, 3);
    c.options.radius = n.optional_number("radius");
    c.options.tau = n.number("tau", c.options.tau);
    c.options.epsilon = n.number("epsilon", c.options.epsilon);
    if (!(c.options.epsilon > 0.0 && c.options.epsilon < c.options.tau))
    {
        n.fail("epsilon", "must satisfy 0 < epsilon < tau");
    }
    c.options.K = n.count("K", c.options.K);
    require_at_least(n, "K", c.options.K, 1);
    c.options.m = n.count("m", c.options.m);
    require_at_least(n, "m", c.options.m, 1);
    n.finish();
    return c;
}

DiagnosticsSpec parse_diagnostics(Node n)
{
    DiagnosticsSpec d;
    if (n.has("success_tau"))
    {
        d.success_tau = n.numbers("success_tau");
        for (double t : d.success_tau)
        {
            if (!(t > 0.0))
            {
                n.fail("success_tau", "every tau must be positive");
            }
        }
    }
    if (n.has("cluster_masses"))
    {
        auto c = n.child("cluster_masses");
        d.cluster_delta_prime = c.number("delta_prime", 0.4);
        require_positive(c, "delta_prime", *d.cluster_delta_prime);
        c.finish();
    }
    if (n.has("w2_oracle"))
    {
        auto c = n.child("w2_oracle");
        W2OracleSpec w;
        w.grid_points = c.count("grid_points", w.grid_points);
        require_at_least(c, "grid_points", w.grid_points, 1000);
        w.n_projections = c.count("n_projections", w.n_projections);
        require_at_least(c, "n_projections", w.n_projections, 16);
        c.finish();
        d.w2_oracle = w;
    }
    if (n.has("constants"))
    {
        d.constants = parse_constants(n.child("constants"));
    }
    n.finish();
    return d;
}

CheckSpec parse_check(Node n, std::optional<PotentialSpec> const& fallback)
{
    auto const type = n.string("type");
    auto potential = [&] {
        if (n.has("potential"))
        {
            return parse_potential(n.child("potential"));
        }
        if (!fallback)
        {
            n.fail("", "check needs a \"potential\" (none at top level either)");
        }
        return *fallback;
    };
    auto form = [&](Node& node, DriftForm def) {
        try
        {
            return parse_drift_form(node.string("form", std::string(to_string(def))));
        }
        catch (std::invalid_argument const& e)
        {
            node.fail("form", e.what());
        }
    };

    if (type == "laplace_weights")
    {
        LaplaceCheck c;
        c.potential = potential();
        if (c.potential.dim != 1)
        {
            n.fail("potential", "laplace_weights check needs a one-dimensional potential");
        }
        c.sigma = n.number("sigma");
        require_sigma(n, "sigma", c.sigma);
        c.n_samples = n.count("n_samples", c.n_samples);
        require_at_least(n, "n_samples", c.n_samples, 1);
        c.delta_prime = n.number("delta_prime", c.delta_prime);
        require_positive(n, "delta_prime", c.delta_prime);
        c.tolerance = n.number("tolerance", c.tolerance);
        c.grid_points = n.count("grid_points", c.grid_points);
        require_at_least(n, "grid_points", c.grid_points, 1000);
        if (n.has("sfs"))
        {
            auto s = n.child("sfs");
            SfsCheckSpec sc;
            sc.K = s.count("K", sc.K);
            require_at_least(s, "K", sc.K, 1);
            sc.m = s.count("m", sc.m);
            require_at_least(s, "m", sc.m, 1);
            sc.form = form(s, sc.form);
            sc.n_runs = s.count("n_runs", sc.n_runs);
            require_at_least(s, "n_runs", sc.n_runs, 1);
            sc.tolerance = s.number("tolerance", sc.tolerance);
            s.finish();
            c.sfs = sc;
        }
        n.finish();
        return c;
    }
    if (type == "large_deviation")
    {
        SlopeCheck c;
        c.potential = potential();
        if (c.potential.dim != 1)
        {
            n.fail("potential", "large_deviation check needs a one-dimensional potential");
        }
        c.tau = n.number("tau", c.tau);
        require_positive(n, "tau", c.tau);
        if (n.has("sigmas"))
        {
            c.sigmas = n.numbers("sigmas");
        }
        for (std::size_t i = 0; i < c.sigmas.size(); ++i)
        {
            if (!(c.sigmas[i] > 0.0 && c.sigmas[i] <= 1.0) || (i > 0 && !(c.sigmas[i] < c.sigmas[i - 1])))
            {
                n.fail("sigmas", "must be strictly decreasing values in (0, 1]");
            }
        }
        c.tolerance = n.number("tolerance", c.tolerance);
        c.grid_points = n.count("grid_points", c.grid_points);
        require_at_least(n, "grid_points", c.grid_points, 1000);
        n.finish();
        return c;
    }
    if (type == "w2_trend")
    {
        W2TrendCheck c;
        c.potential = potential();
        if (c.potential.dim != 1 && c.potential.name != "quadratic")
        {
            n.fail("potential", "w2_trend needs d = 1 or a quadratic potential");
        }
        c.sigma = n.number("sigma");
        require_sigma(n, "sigma", c.sigma);
        c.m = n.count("m", c.m);
        require_at_least(n, "m", c.m, 1);
        c.form = form(n, c.form);
        if (n.has("Ks"))
        {
            c.Ks = n.counts("Ks");
        }
        if (c.Ks.size() < 2 || std::find(c.Ks.begin(), c.Ks.end(), 0u) != c.Ks.end())
        {
            n.fail("Ks", "needs at least two positive step counts");
        }
        c.n_runs = n.count("n_runs", c.n_runs);
        require_at_least(n, "n_runs", c.n_runs, 2);
        c.min_non_increasing = n.count("min_non_increasing", c.min_non_increasing);
        c.grid_points = n.count("grid_points", c.grid_points);
        require_at_least(n, "grid_points", c.grid_points, 1000);
        c.n_projections = n.count("n_projections", c.n_projections);
        require_at_least(n, "n_projections", c.n_projections, 16);
        n.finish();
        return c;
    }
    if (type == "constants")
    {
        ConstantsCheck c;
        c.potential = potential();
        if (c.potential.dim > 3)
        {
            n.fail("potential", "constants check supports dim <= 3");
        }
        // The constants block lives inline next to "type" and "potential".
        ConstantsSpec s;
        s.sigma = n.number("sigma");
        require_sigma(n, "sigma", s.sigma);
        s.options.grid_points_per_dim = n.count("grid_points_per_dim", s.options.grid_points_per_dim);
        require_at_least(n, "grid_points_per_dim", s.options.grid_points_per_dim, 3);
        s.options.radius = n.optional_number("radius");
        s.options.tau = n.number("tau", s.options.tau);
        s.options.epsilon = n.number("epsilon", s.options.epsilon);
        if (!(s.options.epsilon > 0.0 && s.options.epsilon < s.options.tau))
        {
            n.fail("epsilon", "must satisfy 0 < epsilon < tau");
        }
        s.options.K = n.count("K", s.options.K);
        require_at_least(n, "K", s.options.K, 1);
        s.options.m = n.count("m", s.options.m);
        require_at_least(n, "m", s.options.m, 1);
        n.finish();
        c.constants = s;
        return c;
    }
    n.fail("type", "unknown check \"" + type + "\" (expected laplace_weights, large_deviation, w2_trend or constants)");
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

ExperimentConfig parse_config(std::string_view text, std::string const& source_name)
{
    ExperimentConfig cfg;
    cfg.source_name = source_name;
    cfg.config_hash = fnv1a64(text);
    cfg.source_map = SourceMap(text);

    nlohmann::json root;
    try
    {
        root = nlohmann::json::parse(text);
    }
    catch (nlohmann::json::parse_error const& e)
    {
        // Byte offset -> line.
        std::size_t const upto = std::min<std::size_t>(e.byte, text.size());
        int const line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + upto, '\n'));
        throw ConfigError(source_name + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
    }

    Source const src{source_name, &cfg.source_map};
    Node n(root, "", src);
    cfg.master_seed = n.count("master_seed", 0);
    cfg.n_runs = n.count("n_runs", 1);
    require_at_least(n, "n_runs", cfg.n_runs, 1);
    if (n.has("potential"))
    {
        cfg.potential = parse_potential(n.child("potential"));
    }
    if (n.has("sampler"))
    {
        cfg.sampler = parse_sampler(n.child("sampler"));
    }
    if (n.has("baseline"))
    {
        cfg.baseline = parse_sampler(n.child("baseline"));
    }
    if (n.has("diagnostics"))
    {
        cfg.diagnostics = parse_diagnostics(n.child("diagnostics"));
    }
    if (n.has("checks"))
    {
        auto const& arr = n.raw("checks");
        if (!arr.is_array())
        {
            n.fail("checks", "expected an array of check objects");
        }
        for (std::size_t i = 0; i < arr.size(); ++i)
        {
            cfg.checks.push_back(parse_check(Node(arr[i], "/checks/" + std::to_string(i), src), cfg.potential));
        }
    }
    if (n.has("output_dir"))
    {
        cfg.output_dir = n.string("output_dir");
    }
    n.finish();

    // Cross-field rules.
    if (cfg.potential)
    {
        auto const& p = *cfg.potential;
        for (auto const* s : {&cfg.sampler, &cfg.baseline})
        {
            if (*s && std::holds_alternative<LangevinConfig>(**s))
            {
                auto const& init = std::get<LangevinConfig>(**s).init;
                if (init && init->size() != p.dim)
                {
                    src.fail(s == &cfg.sampler ? "/sampler/init" : "/baseline/init",
                             "init has " + std::to_string(init->size()) + " entries but the potential has dim "
                                 + std::to_string(p.dim));
                }
            }
        }
        if (cfg.diagnostics.w2_oracle && p.name != "quadratic" && (p.dim != 1 || !p.smooth))
        {
            src.fail("/diagnostics/w2_oracle", "needs a quadratic potential or a smoothed one-dimensional potential");
        }
        if (cfg.diagnostics.constants && p.dim > 3)
        {
            src.fail("/diagnostics/constants", "constants support dim <= 3");
        }
    }
    return cfg;
}

ExperimentConfig load_config(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw ConfigError(path.string() + ":0: cannot open config file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Potentials

namespace {

std::optional<std::pair<double, double>> resolve_smoothing(PotentialSpec const& s)
{
    if (!s.smooth)
    {
        return std::nullopt;
    }
    double R = 0.0;
    if (s.radius)
    {
        R = *s.radius;
    }
    else if (s.name == "rastrigin")
    {
        R = default_rastrigin_radius({s.B, s.C, s.dim});
    }
    else
    {
        R = kDoubleWellRadius;
    }
    return std::pair{R, s.delta.value_or(R / 5.0)};
}

ojson potential_json(PotentialSpec const& s)
{
    ojson j;
    j["name"] = s.name;
    j["dim"] = s.dim;
    if (s.name == "quadratic")
    {
        j["shift"] = s.shift;
    }
    else if (s.name == "rastrigin")
    {
        j["B"] = s.B;
        j["C"] = s.C;
    }
    else
    {
        j["c1"] = s.c1;
        j["c2"] = s.c2;
    }
    if (auto sm = resolve_smoothing(s))
    {
        j["smoothing"] = {{"radius", sm->first}, {"delta", sm->second}};
    }
    return j;
}

ojson sampler_json(SamplerConfig const& cfg)
{
    ojson j;
    if (auto const* c = std::get_if<SfsConfig>(&cfg))
    {
        j["type"] = "sfs";
        j["sigma"] = c->sigma;
        j["K"] = c->K;
        j["m"] = c->m;
        j["form"] = std::string(to_string(c->form));
    }
    else
    {
        auto const& l = std::get<LangevinConfig>(cfg);
        j["type"] = "langevin";
        j["sigma"] = l.sigma;
        j["step"] = l.step;
        j["steps"] = l.steps;
        j["burn_in"] = l.burn_in;
        if (l.init)
        {
            j["init"] = *l.init;
        }
        else
        {
            j["init_box"] = l.init_box;
        }
    }
    return j;
}

double sampler_sigma(SamplerConfig const& cfg)
{
    return std::visit([](auto const& c) { return c.sigma; }, cfg);
}

std::uint64_t gaussian_budget(SamplerConfig const& cfg, std::size_t d)
{
    if (auto const* c = std::get_if<SfsConfig>(&cfg))
    {
        return sfs_gaussian_budget(*c, d);
    }
    return static_cast<std::uint64_t>(std::get<LangevinConfig>(cfg).steps) * d;
}

}  // namespace

PotentialPtr build_potential(PotentialSpec const& s)
{
    PotentialPtr base;
    if (s.name == "quadratic")
    {
        Point shift = s.shift.empty() ? Point(s.dim, 0.0) : s.shift;
        return make_quadratic(s.dim, shift);
    }
    if (s.name == "rastrigin")
    {
        base = make_rastrigin({s.B, s.C, s.dim});
    }
    else if (s.name == "double_well")
    {
        base = make_double_well_1d(s.c1, s.c2);
    }
    else
    {
        throw std::invalid_argument("unknown potential \"" + s.name + "\"");
    }
    if (auto sm = resolve_smoothing(s))
    {
        return smooth_to_quadratic_tail(base, sm->first, sm->second);
    }
    return base;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string runs_csv(std::vector<RunResult> const& runs, std::size_t d)
{
    std::string out = "run_index";
    for (std::size_t i = 0; i < d; ++i)
    {
        out += ",x_" + std::to_string(i);
    }
    out += ",final_value,best_value,gaussians_consumed,seed\n";
    for (auto const& r : runs)
    {
        out += std::to_string(r.run_index);
        for (double x : r.final_point)
        {
            out += "," + format_double(x);
        }
        out += "," + format_double(r.final_value) + "," + format_double(r.best_value) + ","
               + std::to_string(r.gaussians_consumed) + "," + std::to_string(r.seed_used) + "\n";
    }
    return out;
}

namespace {

void write_text(std::filesystem::path const& path, std::string const& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
    {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
    if (!out)
    {
        throw std::runtime_error("write failed for " + path.string());
    }
}

void write_json(std::filesystem::path const& path, ojson const& j)
{
    write_text(path, j.dump(2) + "\n");
}

std::string hex64(std::uint64_t v)
{
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

[[noreturn]] void config_fail(ExperimentConfig const& cfg, std::string const& pointer, std::string const& message)
{
    Source{cfg.source_name, &cfg.source_map}.fail(pointer, message);
}

std::filesystem::path output_dir(ExperimentConfig const& cfg, CommandOptions const& opts)
{
    std::filesystem::path dir;
    if (opts.out)
    {
        dir = *opts.out;
    }
    else if (cfg.output_dir)
    {
        dir = *cfg.output_dir;
    }
    else
    {
        config_fail(cfg, "", "no output directory: set \"output_dir\" or pass --out");
    }
    std::filesystem::create_directories(dir);
    return dir;
}

PotentialSpec const& need_potential(ExperimentConfig const& cfg, char const* command)
{
    if (!cfg.potential)
    {
        config_fail(cfg, "", std::string("missing required key \"potential\" for '") + command + "'");
    }
    return *cfg.potential;
}

SamplerConfig const& need_sampler(ExperimentConfig const& cfg, std::optional<SamplerConfig> const& s,
                                  char const* key, char const* command)
{
    if (!s)
    {
        config_fail(cfg, "", std::string("missing required key \"") + key + "\" for '" + command + "'");
    }
    return *s;
}

//! Seed of an auxiliary stream (oracle draws, projections, checks) under a batch seed.
std::uint64_t aux_seed(std::uint64_t master, std::uint64_t salt)
{
    return derive_run_seed(splitmix64_mix(master), salt);
}

std::uint64_t baseline_master(std::uint64_t master)
{
    return splitmix64_mix(master ^ 0x626173656c696e65ull);
}

struct Manifest
{
    std::chrono::system_clock::time_point start = std::chrono::system_clock::now();
    std::chrono::steady_clock::time_point tick = std::chrono::steady_clock::now();
    ojson body;
    std::vector<std::string> outputs;

    Manifest(ExperimentConfig const& cfg, CommandOptions const& opts, char const* command)
    {
        body["tool"] = "sfs_cli";
        body["version"] = kToolVersion;
        body["command"] = command;
        body["config"] = std::filesystem::path(cfg.source_name).filename().string();
        body["config_hash"] = "fnv1a64:" + hex64(cfg.config_hash);
        body["master_seed"] = opts.seed.value_or(cfg.master_seed);
        body["seed_override"] = opts.seed.has_value();
    }

    void write(std::filesystem::path const& dir)
    {
        std::time_t const t = std::chrono::system_clock::to_time_t(start);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
        double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
        outputs.push_back("manifest.json");
        body["outputs"] = outputs;
        body["wall_clock"] = {{"started_at", stamp}, {"elapsed_seconds", secs}};
        write_json(dir / "manifest.json", body);
    }
};

ojson seeds_json(std::vector<RunResult> const& runs)
{
    auto j = ojson::array();
    for (auto const& r : runs)
    {
        j.push_back(r.seed_used);
    }
    return j;
}

ojson value_stats(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    std::size_t const n = v.size();
    double const mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double const median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    double var = 0.0;
    for (double x : v)
    {
        var += (x - mean) * (x - mean);
    }
    var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
    ojson j;
    j["mean"] = mean;
    j["median"] = median;
    j["min"] = v.front();
    j["max"] = v.back();
    j["std"] = std::sqrt(var);
    return j;
}

std::vector<double> finals(std::vector<RunResult> const& runs)
{
    std::vector<double> v;
    for (auto const& r : runs)
    {
        v.push_back(r.final_value);
    }
    return v;
}

std::vector<double> bests(std::vector<RunResult> const& runs)
{
    std::vector<double> v;
    for (auto const& r : runs)
    {
        v.push_back(r.best_value);
    }
    return v;
}

std::vector<double> final_points(std::vector<RunResult> const& runs)
{
    std::vector<double> v;
    for (auto const& r : runs)
    {
        v.insert(v.end(), r.final_point.begin(), r.final_point.end());
    }
    return v;
}

//! Mean and variance test of the final points against N(a, sigma I).
ojson gaussian_check(std::vector<RunResult> const& runs, Point const& a, double sigma)
{
    std::size_t const n = runs.size();
    std::size_t const d = a.size();
    double const mean_tol = 3.0 * std::sqrt(sigma / static_cast<double>(n));
    ojson coords = ojson::array();
    bool all = true;
    for (std::size_t i = 0; i < d; ++i)
    {
        double mean = 0.0;
        for (auto const& r : runs)
        {
            mean += r.final_point[i];
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (auto const& r : runs)
        {
            var += (r.final_point[i] - mean) * (r.final_point[i] - mean);
        }
        var /= static_cast<double>(n > 1 ? n - 1 : 1);
        bool const mean_ok = std::abs(mean - a[i]) <= mean_tol;
        bool const var_ok = std::abs(var - sigma) <= 0.1 * sigma;
        all = all && mean_ok && var_ok;
        ojson c;
        c["mean"] = mean;
        c["target_mean"] = a[i];
        c["mean_tolerance"] = mean_tol;
        c["mean_pass"] = mean_ok;
        c["variance"] = var;
        c["target_variance"] = sigma;
        c["variance_rel_tolerance"] = 0.1;
        c["variance_pass"] = var_ok;
        coords.push_back(c);
    }
    ojson j;
    j["target"] = "N(shift, sigma I)";
    j["coordinates"] = coords;
    j["pass"] = all;
    return j;
}

ojson success_json(std::vector<RunResult> const& runs, std::vector<double> const& taus)
{
    auto j = ojson::array();
    for (double tau : taus)
    {
        j.push_back(to_json(success_rate(std::span<RunResult const>(runs), tau)));
    }
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Checks

std::vector<double> gibbs_reference_samples(PotentialSpec const& spec, double sigma, std::size_t n,
                                            std::uint64_t seed, std::size_t grid_points)
{
    if (spec.name == "quadratic")
    {
        Point const shift = spec.shift.empty() ? Point(spec.dim, 0.0) : spec.shift;
        CounterStream stream(seed, StreamTag::oracle);
        std::vector<double> out(n * spec.dim);
        stream.fill_gaussian(out);
        double const sd = std::sqrt(sigma);
        for (std::size_t j = 0; j < n; ++j)
        {
            for (std::size_t i = 0; i < spec.dim; ++i)
            {
                out[j * spec.dim + i] = shift[i] + sd * out[j * spec.dim + i];
            }
        }
        return out;
    }
    if (spec.dim != 1)
    {
        throw std::invalid_argument("reference samples need d = 1 or a quadratic potential");
    }
    auto const oracle = build_oracle_1d({build_potential(spec), sigma}, grid_points);
    return sample_oracle(oracle, n, seed);
}

namespace {

double max_rel_error(std::vector<double> const& got, std::vector<double> const& want)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i)
    {
        worst = std::max(worst, std::abs(got[i] - want[i]) / want[i]);
    }
    return worst;
}

}  // namespace

LaplaceCheckResult run_laplace_check(LaplaceCheck const& c, std::uint64_t seed, std::size_t workers)
{
    auto const p = build_potential(c.potential);
    LaplaceCheckResult r;
    r.weights = laplace_weights(*p);
    std::vector<Point> minima;
    for (auto const& m : p->known_minima())
    {
        minima.push_back(m.location);
    }

    auto const oracle = build_oracle_1d({p, c.sigma}, c.grid_points);
    auto const samples = sample_oracle(oracle, c.n_samples, seed);
    r.oracle = cluster_masses(samples, 1, minima, c.delta_prime);
    r.oracle_max_rel_error = max_rel_error(r.oracle.masses, r.weights);
    r.oracle_pass = r.oracle_max_rel_error <= c.tolerance;
    r.pass = r.oracle_pass;

    if (c.sfs)
    {
        SfsConfig cfg;
        cfg.sigma = c.sigma;
        cfg.K = c.sfs->K;
        cfg.m = c.sfs->m;
        cfg.form = c.sfs->form;
        auto const runs = run_batch(p, cfg, c.sfs->n_runs, derive_run_seed(seed, 1), workers);
        r.sfs = cluster_masses(final_points(runs), 1, minima, c.delta_prime);
        r.sfs_max_rel_error = max_rel_error(r.sfs->masses, r.weights);
        r.sfs_pass = r.sfs_max_rel_error <= c.sfs->tolerance;
        r.pass = r.pass && r.sfs_pass;
    }
    return r;
}

SlopeCheckResult run_slope_check(SlopeCheck const& c)
{
    SlopeCheckResult r;
    r.slopes = large_deviation_slope(build_potential(c.potential), c.tau, c.sigmas, c.grid_points);
    r.monotone = true;
    for (std::size_t i = 1; i < r.slopes.size(); ++i)
    {
        if (!(std::abs(r.slopes[i].slope + c.tau) < std::abs(r.slopes[i - 1].slope + c.tau)))
        {
            r.monotone = false;
        }
    }
    r.final_rel_error = r.slopes.empty() ? HUGE_VAL : std::abs(r.slopes.back().slope + c.tau) / c.tau;
    r.pass = r.monotone && r.final_rel_error <= c.tolerance;
    return r;
}

W2TrendResult run_w2_trend(W2TrendCheck const& c, std::uint64_t seed, std::size_t workers)
{
    auto const p = build_potential(c.potential);
    std::size_t const d = c.potential.dim;
    auto const reference = gibbs_reference_samples(c.potential, c.sigma, c.n_runs, seed, c.grid_points);
    W2TrendResult r;
    r.Ks = c.Ks;
    for (std::size_t j = 0; j < c.Ks.size(); ++j)
    {
        SfsConfig cfg;
        cfg.sigma = c.sigma;
        cfg.K = c.Ks[j];
        cfg.m = c.m;
        cfg.form = c.form;
        auto const runs = run_batch(p, cfg, c.n_runs, derive_run_seed(seed, j + 1), workers);
        auto const pts = final_points(runs);
        double const w = d == 1 ? w2_exact_1d(pts, reference).distance
                                : w2_sliced(pts, reference, d, c.n_projections, seed).distance;
        r.distances.push_back(w);
    }
    for (std::size_t j = 1; j < r.distances.size(); ++j)
    {
        if (r.distances[j] <= r.distances[j - 1])
        {
            ++r.non_increasing;
        }
    }
    r.pass = r.non_increasing >= c.min_non_increasing;
    return r;
}

ConstantsCheckResult run_constants_check(ConstantsCheck const& c)
{
    auto const p = build_potential(c.potential);
    ConstantsCheckResult r;
    r.report = compute_constants(*p, c.constants.sigma, c.constants.options);
    auto const& k = r.report;
    r.pass = k.xi_sigma_log <= k.zeta_sigma_log && !std::isnan(k.gamma_sigma_log)
             && (std::isfinite(k.gamma_sigma_log) || k.gamma_sigma_log < 0) && !std::isnan(k.failure_bound_log)
             && !std::isnan(k.w2_bound_log);
    return r;
}

ojson to_json(LaplaceCheckResult const& r)
{
    ojson j;
    j["laplace_weights"] = r.weights;
    j["oracle"] = to_json(r.oracle);
    j["oracle_max_rel_error"] = r.oracle_max_rel_error;
    j["oracle_pass"] = r.oracle_pass;
    if (r.sfs)
    {
        j["sfs"] = to_json(*r.sfs);
        j["sfs_max_rel_error"] = r.sfs_max_rel_error;
        j["sfs_pass"] = r.sfs_pass;
    }
    j["pass"] = r.pass;
    return j;
}

ojson to_json(SlopeCheckResult const& r)
{
    ojson j;
    j["slopes"] = to_json(r.slopes);
    j["monotone"] = r.monotone;
    j["final_rel_error"] = r.final_rel_error;
    j["pass"] = r.pass;
    return j;
}

ojson to_json(W2TrendResult const& r)
{
    ojson j;
    j["Ks"] = r.Ks;
    j["w2"] = r.distances;
    j["non_increasing_steps"] = r.non_increasing;
    j["pass"] = r.pass;
    return j;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_run(ExperimentConfig const& cfg, CommandOptions const& opts)
{
    auto const& spec = need_potential(cfg, "run");
    auto const& sampler = need_sampler(cfg, cfg.sampler, "sampler", "run");
    auto const dir = output_dir(cfg, opts);
    Manifest manifest(cfg, opts, "run");
    std::uint64_t const master = opts.seed.value_or(cfg.master_seed);

    auto const p = build_potential(spec);
    auto const runs = run_batch(p, sampler, cfg.n_runs, master, opts.workers);
    double const sigma = sampler_sigma(sampler);

    ojson summary;
    summary["command"] = "run";
    summary["potential"] = potential_json(spec);
    summary["sampler"] = sampler_json(sampler);
    summary["n_runs"] = cfg.n_runs;
    summary["master_seed"] = master;
    summary["final_value"] = value_stats(finals(runs));
    summary["best_value"] = value_stats(bests(runs));
    summary["success"] = success_json(runs, cfg.diagnostics.success_tau);
    if (spec.name == "quadratic")
    {
        summary["gaussian_check"] = gaussian_check(runs, spec.shift, sigma);
    }
    if (cfg.diagnostics.cluster_delta_prime)
    {
        std::vector<Point> minima;
        for (auto const& m : p->known_minima())
        {
            minima.push_back(m.location);
        }
        ojson c = to_json(cluster_masses(final_points(runs), spec.dim, minima, *cfg.diagnostics.cluster_delta_prime));
        c["delta_prime"] = *cfg.diagnostics.cluster_delta_prime;
        c["laplace_weights"] = laplace_weights(*p);
        summary["cluster_masses"] = c;
    }
    if (cfg.diagnostics.w2_oracle)
    {
        auto const& w = *cfg.diagnostics.w2_oracle;
        auto const reference = gibbs_reference_samples(spec, sigma, cfg.n_runs, aux_seed(master, 0), w.grid_points);
        auto const pts = final_points(runs);
        if (cfg.n_runs < 2)
        {
            config_fail(cfg, "/diagnostics/w2_oracle", "needs n_runs >= 2");
        }
        summary["w2_oracle"] = spec.dim == 1
                                   ? to_json(w2_exact_1d(pts, reference))
                                   : to_json(w2_sliced(pts, reference, spec.dim, w.n_projections, aux_seed(master, 1)));
    }
    if (cfg.diagnostics.constants)
    {
        auto const& c = *cfg.diagnostics.constants;
        auto const report = compute_constants(*p, c.sigma, c.options);
        ojson j = to_json(report);
        auto const s = success_rate(std::span<RunResult const>(runs), c.options.tau);
        j["empirical_failure_rate"] = 1.0 - s.rate;
        summary["constants"] = j;
    }

    write_text(dir / "runs.csv", runs_csv(runs, spec.dim));
    write_json(dir / "summary.json", summary);
    manifest.outputs = {"runs.csv", "summary.json"};
    manifest.body["run_seeds"] = seeds_json(runs);
    manifest.write(dir);
}

void cmd_compare(ExperimentConfig const& cfg, CommandOptions const& opts)
{
    auto const& spec = need_potential(cfg, "compare");
    auto const& sampler = need_sampler(cfg, cfg.sampler, "sampler", "compare");
    auto const& baseline = need_sampler(cfg, cfg.baseline, "baseline", "compare");
    std::uint64_t const budget_a = gaussian_budget(sampler, spec.dim);
    std::uint64_t const budget_b = gaussian_budget(baseline, spec.dim);
    double const gap = std::abs(static_cast<double>(budget_a) - static_cast<double>(budget_b))
                       / static_cast<double>(std::max(budget_a, budget_b));
    if (gap > 0.01)
    {
        config_fail(cfg, "/baseline",
                    "Gaussian budgets of sampler (" + std::to_string(budget_a) + ") and baseline ("
                        + std::to_string(budget_b) + ") differ by more than 1%");
    }
    auto const dir = output_dir(cfg, opts);
    Manifest manifest(cfg, opts, "compare");
    std::uint64_t const master = opts.seed.value_or(cfg.master_seed);

    auto const p = build_potential(spec);
    auto const runs_a = run_batch(p, sampler, cfg.n_runs, master, opts.workers);
    auto const runs_b = run_batch(p, baseline, cfg.n_runs, baseline_master(master), opts.workers);

    // Each side is scored by its reported value: best_value, which for SFS is the final value.
    auto side = [&](SamplerConfig const& s, std::vector<RunResult> const& runs, std::uint64_t budget) {
        ojson j;
        j["config"] = sampler_json(s);
        j["gaussian_budget_per_run"] = budget;
        j["final_value"] = value_stats(finals(runs));
        j["reported_value"] = value_stats(bests(runs));
        j["success"] = success_json(runs, cfg.diagnostics.success_tau);
        return j;
    };
    auto const va = bests(runs_a);
    auto const vb = bests(runs_b);
    auto mean_var = [](std::vector<double> const& v) {
        double const mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v)
        {
            var += (x - mean) * (x - mean);
        }
        return std::pair{mean, v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0};
    };
    auto const [ma, sa] = mean_var(va);
    auto const [mb, sb] = mean_var(vb);
    double const diff = ma - mb;
    double const half = 1.959963984540054 * std::sqrt(sa / static_cast<double>(va.size()) + sb / static_cast<double>(vb.size()));

    ojson out;
    out["command"] = "compare";
    out["potential"] = potential_json(spec);
    out["n_runs"] = cfg.n_runs;
    out["master_seed"] = master;
    out["sampler"] = side(sampler, runs_a, budget_a);
    out["baseline"] = side(baseline, runs_b, budget_b);
    out["difference"] = {{"statistic", "mean reported value, sampler minus baseline"},
                         {"value", diff},
                         {"ci95", {diff - half, diff + half}},
                         {"sampler_lower", diff < 0.0}};

    std::string scatter = "side,run_index";
    for (std::size_t i = 0; i < spec.dim; ++i)
    {
        scatter += ",x_" + std::to_string(i);
    }
    scatter += ",value\n";
    for (auto const& [name, runs] : {std::pair{"sampler", &runs_a}, std::pair{"baseline", &runs_b}})
    {
        for (auto const& r : *runs)
        {
            scatter += std::string(name) + "," + std::to_string(r.run_index);
            for (double x : r.best_point)
            {
                scatter += "," + format_double(x);
            }
            scatter += "," + format_double(r.best_value) + "\n";
        }
    }

    write_text(dir / "runs_sampler.csv", runs_csv(runs_a, spec.dim));
    write_text(dir / "runs_baseline.csv", runs_csv(runs_b, spec.dim));
    write_text(dir / "scatter.csv", scatter);
    write_json(dir / "comparison.json", out);
    manifest.outputs = {"runs_sampler.csv", "runs_baseline.csv", "scatter.csv", "comparison.json"};
    manifest.body["run_seeds"] = {{"sampler", seeds_json(runs_a)}, {"baseline", seeds_json(runs_b)}};
    manifest.write(dir);
}

bool cmd_verify(ExperimentConfig const& cfg, CommandOptions const& opts)
{
    if (cfg.checks.empty())
    {
        config_fail(cfg, "", "missing required key \"checks\" for 'verify'");
    }
    auto const dir = output_dir(cfg, opts);
    Manifest manifest(cfg, opts, "verify");
    std::uint64_t const master = opts.seed.value_or(cfg.master_seed);

    ojson results = ojson::array();
    ojson seeds = ojson::array();
    bool all = true;
    for (std::size_t i = 0; i < cfg.checks.size(); ++i)
    {
        std::uint64_t const seed = aux_seed(master, i);
        seeds.push_back(seed);
        ojson entry;
        entry["index"] = i;
        bool pass = false;
        std::visit(
            [&](auto const& c) {
                using T = std::decay_t<decltype(c)>;
                entry["potential"] = potential_json(c.potential);
                if constexpr (std::is_same_v<T, LaplaceCheck>)
                {
                    entry["type"] = "laplace_weights";
                    entry["sigma"] = c.sigma;
                    entry["tolerance"] = c.tolerance;
                    auto const r = run_laplace_check(c, seed, opts.workers);
                    entry["result"] = to_json(r);
                    pass = r.pass;
                }
                else if constexpr (std::is_same_v<T, SlopeCheck>)
                {
                    entry["type"] = "large_deviation";
                    entry["tau"] = c.tau;
                    entry["tolerance"] = c.tolerance;
                    auto const r = run_slope_check(c);
                    entry["result"] = to_json(r);
                    std::string const name = "slopes_" + std::to_string(i) + ".csv";
                    write_text(dir / name, slopes_csv(r.slopes));
                    manifest.outputs.push_back(name);
                    pass = r.pass;
                }
                else if constexpr (std::is_same_v<T, W2TrendCheck>)
                {
                    entry["type"] = "w2_trend";
                    entry["sigma"] = c.sigma;
                    entry["m"] = c.m;
                    entry["form"] = std::string(to_string(c.form));
                    entry["n_runs"] = c.n_runs;
                    entry["min_non_increasing"] = c.min_non_increasing;
                    auto const r = run_w2_trend(c, seed, opts.workers);
                    entry["result"] = to_json(r);
                    pass = r.pass;
                }
                else
                {
                    entry["type"] = "constants";
                    auto const r = run_constants_check(c);
                    entry["result"] = to_json(r.report);
                    pass = r.pass;
                }
            },
            cfg.checks[i]);
        entry["pass"] = pass;
        all = all && pass;
        results.push_back(entry);
    }

    ojson out;
    out["command"] = "verify";
    out["master_seed"] = master;
    out["checks"] = results;
    out["all_pass"] = all;
    write_json(dir / "verification.json", out);
    manifest.outputs.push_back("verification.json");
    manifest.body["check_seeds"] = seeds;
    manifest.write(dir);
    return all;
}

void cmd_constants(ExperimentConfig const& cfg, CommandOptions const& opts)
{
    auto const& spec = need_potential(cfg, "constants");
    if (!cfg.diagnostics.constants)
    {
        config_fail(cfg, "", "missing required key \"diagnostics.constants\" for 'constants'");
    }
    auto const dir = output_dir(cfg, opts);
    Manifest manifest(cfg, opts, "constants");
    auto const& c = *cfg.diagnostics.constants;
    auto const p = build_potential(spec);
    ojson out;
    out["potential"] = potential_json(spec);
    out["constants"] = to_json(compute_constants(*p, c.sigma, c.options));
    write_json(dir / "constants.json", out);
    manifest.outputs = {"constants.json"};
    manifest.write(dir);
}

}  // namespace sfs
