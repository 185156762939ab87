#include "sfs/drift.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sfs {

std::string_view to_string(DriftForm form)
{
    return form == DriftForm::gradient ? "gradient" : "stein";
}

DriftForm parse_drift_form(std::string_view name)
{
    if (name == "gradient")
    {
        return DriftForm::gradient;
    }
    if (name == "stein")
    {
        return DriftForm::stein;
    }
    throw std::invalid_argument("drift form must be \"gradient\" or \"stein\", got \"" + std::string(name) + "\"");
}

LogRatioPoint log_fhat(Potential const& p, double sigma, std::span<double const> x)
{
    if (!(sigma > 0.0))
    {
        throw std::invalid_argument("sigma must be positive");
    }
    LogRatioPoint out{Point(x.begin(), x.end()), 0.0, Point(x.size())};
    double const shifted = p.shifted_value_and_score(x, out.score_term);
    out.log_fhat = shifted / sigma;
    for (double& s : out.score_term)
    {
        s /= sigma;
    }
    if (!std::isfinite(out.log_fhat)
        || !std::all_of(out.score_term.begin(), out.score_term.end(), [](double v) { return std::isfinite(v); }))
    {
        throw std::domain_error("non-finite potential value or gradient");
    }
    return out;
}

void softmax_average(std::span<double const> log_weights, std::span<double const> rows, std::size_t width,
                     std::span<double> out)
{
    std::size_t const m = log_weights.size();
    auto const top_it = std::max_element(log_weights.begin(), log_weights.end());
    if (m == 0 || std::isnan(*top_it) || *top_it == -HUGE_VAL)
    {
        throw std::domain_error("softmax weights are undefined (no finite log weight)");
    }
    auto const ref = static_cast<std::size_t>(top_it - log_weights.begin());
    double const top = *top_it;
    auto const ref_row = rows.subspan(ref * width, width);

    std::fill(out.begin(), out.end(), 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j)
    {
        double const w = std::exp(log_weights[j] - top);
        if (std::isnan(w))
        {
            throw std::domain_error("NaN in softmax weights");
        }
        total += w;
        auto const row = rows.subspan(j * width, width);
        for (std::size_t i = 0; i < width; ++i)
        {
            out[i] += w * (row[i] - ref_row[i]);
        }
    }
    for (std::size_t i = 0; i < width; ++i)
    {
        out[i] = ref_row[i] + out[i] / total;
    }
}

DriftEstimator::DriftEstimator(Potential const& p, double sigma, DriftForm form, std::size_t m)
    : p_(p)
    , sigma_(sigma)
    , form_(form)
    , m_(m)
    , d_(p.dim())
    , y_(d_)
    , score_(d_)
    , log_weights_(m)
    , rows_(m * d_)
{
    if (!(sigma > 0.0))
    {
        throw std::invalid_argument("sigma must be positive");
    }
    if (m == 0)
    {
        throw std::invalid_argument("drift estimator needs m >= 1");
    }
}

void DriftEstimator::estimate(std::span<double const> x, double t, std::span<double const> noise,
                              std::span<double> out)
{
    if (!(t >= 0.0 && t < 1.0))
    {
        throw std::invalid_argument("drift time must lie in [0, 1)");
    }
    if (noise.size() != m_ * d_ || x.size() != d_ || out.size() != d_)
    {
        throw std::invalid_argument("drift estimator buffer sizes do not match m x d");
    }
    double const scale = std::sqrt((1.0 - t) * sigma_);
    double const inv_sigma = 1.0 / sigma_;
    for (std::size_t j = 0; j < m_; ++j)
    {
        auto const z = noise.subspan(j * d_, d_);
        for (std::size_t i = 0; i < d_; ++i)
        {
            y_[i] = x[i] + scale * z[i];
        }
        double const shifted = p_.shifted_value_and_score(y_, score_);
        log_weights_[j] = shifted * inv_sigma;
        double* row = rows_.data() + j * d_;
        if (form_ == DriftForm::gradient)
        {
            for (std::size_t i = 0; i < d_; ++i)
            {
                row[i] = score_[i] * inv_sigma;
            }
        }
        else
        {
            for (std::size_t i = 0; i < d_; ++i)
            {
                row[i] = z[i] / scale;
            }
        }
    }
    softmax_average(log_weights_, rows_, d_, out);
    for (double v : out)
    {
        if (!std::isfinite(v))
        {
            throw std::domain_error("non-finite drift estimate");
        }
    }
}

std::vector<double> DriftEstimator::standard_error(std::span<double const> estimate) const
{
    double const top = *std::max_element(log_weights_.begin(), log_weights_.end());
    double total = 0.0;
    std::vector<double> acc(d_, 0.0);
    for (std::size_t j = 0; j < m_; ++j)
    {
        double const w = std::exp(log_weights_[j] - top);
        total += w;
        for (std::size_t i = 0; i < d_; ++i)
        {
            double const dev = rows_[j * d_ + i] - estimate[i];
            acc[i] += w * w * dev * dev;
        }
    }
    for (double& a : acc)
    {
        a = std::sqrt(a) / total;
    }
    return acc;
}

double DriftEstimator::effective_sample_size() const
{
    double const top = *std::max_element(log_weights_.begin(), log_weights_.end());
    double s1 = 0.0, s2 = 0.0;
    for (double l : log_weights_)
    {
        double const w = std::exp(l - top);
        s1 += w;
        s2 += w * w;
    }
    return s1 * s1 / s2;
}

Point estimate_drift(Potential const& p, double sigma, std::span<double const> x, double t, std::size_t m,
                     DriftForm form, std::span<double const> noise)
{
    DriftEstimator est(p, sigma, form, m);
    Point out(p.dim());
    est.estimate(x, t, noise, out);
    return out;
}

Point exact_drift_quadratic(std::span<double const> a, double sigma)
{
    if (!(sigma > 0.0))
    {
        throw std::invalid_argument("sigma must be positive");
    }
    Point b(a.begin(), a.end());
    for (double& v : b)
    {
        v /= sigma;
    }
    return b;
}

}  // namespace sfs
