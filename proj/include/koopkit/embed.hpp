#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "koopkit/systems.hpp"

namespace koop {

/// Columns of X and Xplus are matched predecessor/successor states.
struct SnapshotPair {
    RealMatrix X;      // dim x T
    RealMatrix Xplus;  // dim x T
};

SnapshotPair snapshot_pairs(const Trajectory& traj);

/// Concatenates pairs column-wise; no pair straddles a trajectory boundary.
SnapshotPair snapshot_pairs(std::span<const Trajectory> trajs);

struct HankelMatrix {
    Index depth;           // L
    RealMatrix values;     // L x (T - L + 1), entry (i, j) = y_{i+j}
    Index source_length;   // T
};

HankelMatrix hankel(const RealVector& series, Index depth);

/// Trajectory of overlapping delay vectors (y_k, ..., y_{k+N}).
Trajectory delay_embed(const RealVector& series, Index num_delays);

/// Serializable description of how a dictionary was built, for model files.
struct MonomialSpec {
    Index n;
    int max_degree;
    bool include_constant;
};
struct IdentitySpec {
    Index n;
};
struct PolynomialSpec {
    Index n;
    std::vector<std::vector<int>> exponents;  // monomial exponent vectors
    RealMatrix coefficients;                  // output_dim x exponents.size()
};
using DictionarySpec = std::variant<MonomialSpec, IdentitySpec, PolynomialSpec>;

/// An evaluable vector of observable functions with analytic Jacobian.
class Dictionary {
public:
    Dictionary() = default;  // empty placeholder, not evaluable

    Dictionary(Index input_dim, Index output_dim,
               std::function<RealVector(const RealVector&)> eval,
               std::function<RealMatrix(const RealVector&)> jacobian,
               std::vector<std::string> labels,
               std::optional<DictionarySpec> spec = std::nullopt);

    RealVector eval(const RealVector& x) const;
    RealMatrix jacobian(const RealVector& x) const;
    Index input_dim() const { return input_dim_; }
    Index output_dim() const { return output_dim_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::optional<DictionarySpec>& spec() const { return spec_; }

    /// Column j lifts column j of the state matrix (dim x T in, D x T out).
    RealMatrix lift(const RealMatrix& states) const;

private:
    Index input_dim_ = 0;
    Index output_dim_ = 0;
    std::function<RealVector(const RealVector&)> eval_;
    std::function<RealMatrix(const RealVector&)> jacobian_;
    std::vector<std::string> labels_;
    std::optional<DictionarySpec> spec_;
};

/// All monomials of total degree 1..max_degree in graded-lexicographic order
/// (constant first when included). Labels follow the "x1^2*x2" pattern.
Dictionary monomial_dictionary(Index n, int max_degree, bool include_constant = false);

/// Degree-1 monomials; lifting is the identity.
Dictionary identity_dictionary(Index n);

/// Monomials of total degree min_degree..max_degree only; min_degree >= 2
/// gives a valid conjugacy-residual basis (vanishes with its Jacobian at 0).
Dictionary monomial_range_dictionary(Index n, int min_degree, int max_degree);

/// Wraps user-supplied scalar observables and gradients. The Jacobian is
/// validated against central finite differences on fixed sample points;
/// deviation beyond 1e-4 raises ValidationError.
Dictionary custom_dictionary(
    std::vector<std::function<double(const RealVector&)>> functions,
    std::vector<std::function<RealVector(const RealVector&)>> gradients,
    std::vector<std::string> labels, Index input_dim);

/// Polynomial coordinates: row i of coefficients weights the listed monomial
/// exponent vectors. Serializable, with analytic Jacobian.
Dictionary polynomial_dictionary(Index n,
                                 std::vector<std::vector<int>> exponents,
                                 RealMatrix coefficients,
                                 std::vector<std::string> labels = {});

/// Rebuilds a dictionary from its serializable description.
Dictionary dictionary_from_spec(const DictionarySpec& spec);

/// Graded-lex exponent vectors for total degree 1..max_degree (degree 0 first
/// when include_constant). Shared by the monomial dictionary and the model
/// serialization code.
std::vector<std::vector<int>> monomial_exponents(Index n, int max_degree,
                                                 bool include_constant);

std::string monomial_label(const std::vector<int>& exponents);

}  // namespace koop
