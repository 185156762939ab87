#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "sfs/potentials.hpp"

namespace sfs {

enum class DriftForm
{
    gradient,  //!< average of grad f_hat over the Gaussian cloud
    stein,     //!< Stein's-lemma form: average of Z f_hat, divided by the cloud scale
};

std::string_view to_string(DriftForm form);
//! Accepts "gradient" or "stein"; throws std::invalid_argument otherwise.
DriftForm parse_drift_form(std::string_view name);

//! f_hat(x) = exp((|x|^2/2 - V(x)) / sigma) in log form, with its log-gradient.
struct LogRatioPoint
{
    Point x;
    double log_fhat = 0.0;
    Point score_term;  //!< (x - grad V(x)) / sigma
};

LogRatioPoint log_fhat(Potential const& p, double sigma, std::span<double const> x);

/*!
 * Softmax-weighted mean of per-sample rows.
 *
 * Computes sum_j w_j c_j with w = softmax(log_weights), where `rows` holds
 * one row of length `width` per sample. The result is formed as
 * c_ref + sum_j w_j (c_j - c_ref) around the heaviest sample, so identical
 * rows return that row exactly, and the weights depend on the log weights
 * only through differences to their maximum.
 */
void softmax_average(std::span<double const> log_weights, std::span<double const> rows, std::size_t width,
                     std::span<double> out);

/*!
 * Monte Carlo estimate of the Schrodinger-Follmer drift at (x, t).
 *
 * With y_j = x + sqrt((1 - t) sigma) Z_j and l_j = log_fhat(y_j):
 *  - gradient form: softmax(l) average of (y_j - grad V(y_j)) / sigma;
 *  - Stein form: softmax(l) average of Z_j, divided by sqrt((1 - t) sigma).
 * The caller supplies the m x d standard normals in `noise` (row-major);
 * nothing is drawn here. Reusable buffers make repeated calls allocation-free.
 */
class DriftEstimator
{
  public:
    DriftEstimator(Potential const& p, double sigma, DriftForm form, std::size_t m);

    void estimate(std::span<double const> x, double t, std::span<double const> noise, std::span<double> out);

    //! Log weights of the last call.
    std::span<double const> log_weights() const { return log_weights_; }
    //! Per-sample contributions of the last call (m x d).
    std::span<double const> contributions() const { return rows_; }
    //! Delta-method standard error of the last estimate, per coordinate.
    std::vector<double> standard_error(std::span<double const> estimate) const;
    //! Kish effective sample size of the last weights.
    double effective_sample_size() const;

    std::size_t samples() const { return m_; }

  private:
    Potential const& p_;
    double sigma_;
    DriftForm form_;
    std::size_t m_;
    std::size_t d_;
    std::vector<double> y_;
    std::vector<double> score_;
    std::vector<double> log_weights_;
    std::vector<double> rows_;
};

Point estimate_drift(Potential const& p, double sigma, std::span<double const> x, double t, std::size_t m,
                     DriftForm form, std::span<double const> noise);

//! For V = |x - a|^2/2 the drift is a / sigma for every (x, t).
Point exact_drift_quadratic(std::span<double const> a, double sigma);

}  // namespace sfs
