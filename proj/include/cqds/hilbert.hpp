#pragma once

// Purified picture of one round: Alice's polarization and Bob's and
// Charlie's gate choices are held in superposition, the photon is pushed
// through the splitter rules as a linear map, and the joint state is
// conditioned on a detector.
//
// Full-space basis, little-endian (first factor fastest):
//   location {Src, ArmB, ArmC, D1, D2, DB, DC} x polarization {H, V}
//   x Bob gate {RH, RV} x Charlie gate {RH, RV}.
// After conditioning, the location factor is dropped and states live on
// polarization x Bob gate x Charlie gate (dims {2, 2, 2}).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqds::hilbert {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

enum class Location : int { Src = 0, ArmB, ArmC, D1, D2, DB, DC };
inline constexpr int kLocations = 7;
inline constexpr int kFullDim = kLocations * 8;

constexpr int full_index(Location loc, int pol, int gate_b, int gate_c) noexcept {
    return static_cast<int>(loc) + kLocations * (pol + 2 * (gate_b + 2 * gate_c));
}

/// Pure state on a tensor product of small factors, little-endian.
struct FactorState {
    Vec amp;
    std::vector<int> dims;

    [[nodiscard]] double norm() const { return amp.norm(); }
    [[nodiscard]] FactorState normalized() const {
        const double n = norm();
        if (n == 0.0) throw std::domain_error("cannot normalize a zero vector");
        return {amp / n, dims};
    }
};

struct DensityOperator {
    Mat rho;
    std::vector<int> dims;

    [[nodiscard]] double trace() const { return rho.trace().real(); }
    [[nodiscard]] double purity() const { return (rho * rho).trace().real(); }
    [[nodiscard]] double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }
    [[nodiscard]] bool hermitian(double tol = 1e-12) const { return (rho - rho.adjoint()).norm() <= tol; }
};

inline int total_dim(const std::vector<int>& dims) {
    int d = 1;
    for (int x : dims) d *= x;
    return d;
}

/// Initial state: photon at the source, Alice's polarization and both gate
/// registers in the given superpositions (each a 2-vector over {H,V} or {RH,RV}).
inline Vec initial_state(const Eigen::Vector2cd& alice, const Eigen::Vector2cd& bob, const Eigen::Vector2cd& charlie) {
    Vec psi = Vec::Zero(kFullDim);
    for (int p = 0; p < 2; ++p) {
        for (int b = 0; b < 2; ++b) {
            for (int c = 0; c < 2; ++c) psi(full_index(Location::Src, p, b, c)) = alice(p) * bob(b) * charlie(c);
        }
    }
    return psi;
}

inline Eigen::Vector2cd plus_state() { return Eigen::Vector2cd(1.0, 1.0) / std::sqrt(2.0); }

/// |phi>_A (|R+>_B |R+>_C) with the photon at the source.
inline Vec build_initial_state() { return initial_state(plus_state(), plus_state(), plus_state()); }

/// Splitter on the way out: |X>_A -> (|X>_b + |X>_c) / sqrt 2.
inline Mat split_operator() {
    Mat u = Mat::Zero(kFullDim, kFullDim);
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < kFullDim; ++i) {
        const int loc = i % kLocations;
        const int rest = i / kLocations;
        if (loc == static_cast<int>(Location::Src)) {
            u(static_cast<int>(Location::ArmB) + kLocations * rest, i) = s;
            u(static_cast<int>(Location::ArmC) + kLocations * rest, i) = s;
        } else if (loc != static_cast<int>(Location::ArmB) && loc != static_cast<int>(Location::ArmC)) {
            u(i, i) = 1.0;
        }
    }
    return u;
}

/// Gates: an arm whose party reflects the photon's polarization keeps it;
/// otherwise the photon is absorbed into DB or DC.
inline Mat gate_operator() {
    Mat u = Mat::Zero(kFullDim, kFullDim);
    for (int p = 0; p < 2; ++p) {
        for (int b = 0; b < 2; ++b) {
            for (int c = 0; c < 2; ++c) {
                const int in_b = full_index(Location::ArmB, p, b, c);
                const int in_c = full_index(Location::ArmC, p, b, c);
                u(b == p ? in_b : full_index(Location::DB, p, b, c), in_b) = 1.0;
                u(c == p ? in_c : full_index(Location::DC, p, b, c), in_c) = 1.0;
                for (Location l : {Location::Src, Location::D1, Location::D2, Location::DB, Location::DC}) {
                    const int i = full_index(l, p, b, c);
                    if (l == Location::DB && b != p) continue;  // target of the absorption above
                    if (l == Location::DC && c != p) continue;
                    u(i, i) = 1.0;
                }
            }
        }
    }
    return u;
}

/// Splitter on the way back: |X>_b -> (|D2^X> + |D1^X>) / sqrt 2 and
/// |X>_c -> (|D2^X> - |D1^X>) / sqrt 2.
inline Mat recombine_operator() {
    Mat u = Mat::Zero(kFullDim, kFullDim);
    const double s = 1.0 / std::sqrt(2.0);
    for (int p = 0; p < 2; ++p) {
        for (int b = 0; b < 2; ++b) {
            for (int c = 0; c < 2; ++c) {
                const int d1 = full_index(Location::D1, p, b, c);
                const int d2 = full_index(Location::D2, p, b, c);
                const int ab = full_index(Location::ArmB, p, b, c);
                const int ac = full_index(Location::ArmC, p, b, c);
                u(d2, ab) = s;
                u(d1, ab) = s;
                u(d2, ac) = s;
                u(d1, ac) = -s;
                for (Location l : {Location::Src, Location::DB, Location::DC}) {
                    const int i = full_index(l, p, b, c);
                    u(i, i) = 1.0;
                }
            }
        }
    }
    return u;
}

inline Vec evolve(const Vec& initial) { return recombine_operator() * (gate_operator() * (split_operator() * initial)); }

enum class Detector { D1, D2 };

struct ConditionalState {
    bool possible = false;     // false: the detector cannot click on this input
    double probability = 0.0;  // squared norm of the projected branch
    FactorState state;         // normalized, over {pol, Bob gate, Charlie gate}
};

/// Projects an evolved state onto one detector and renormalizes.
inline ConditionalState condition(const Vec& evolved, Detector which) {
    const Location loc = which == Detector::D1 ? Location::D1 : Location::D2;
    FactorState branch{Vec::Zero(8), {2, 2, 2}};
    for (int p = 0; p < 2; ++p) {
        for (int b = 0; b < 2; ++b) {
            for (int c = 0; c < 2; ++c) branch.amp(p + 2 * (b + 2 * c)) = evolved(full_index(loc, p, b, c));
        }
    }
    ConditionalState out;
    out.probability = branch.amp.squaredNorm();
    if (out.probability < 1e-24) return out;
    out.possible = true;
    out.state = branch.normalized();
    return out;
}

inline ConditionalState evolve_and_condition(Detector which) { return condition(evolve(build_initial_state()), which); }

namespace detail {

inline std::vector<int> digits(int index, const std::vector<int>& dims) {
    std::vector<int> d(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        d[k] = index % dims[k];
        index /= dims[k];
    }
    return d;
}

inline int compose(const std::vector<int>& digit, const std::vector<int>& dims, const std::vector<int>& which) {
    int idx = 0;
    int stride = 1;
    for (int k : which) {
        idx += digit[static_cast<std::size_t>(k)] * stride;
        stride *= dims[static_cast<std::size_t>(k)];
    }
    return idx;
}

inline std::vector<int> complement(const std::vector<int>& keep, std::size_t n) {
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(n); ++k) {
        if (std::find(keep.begin(), keep.end(), k) == keep.end()) out.push_back(k);
    }
    return out;
}

inline std::vector<int> sub_dims(const std::vector<int>& dims, const std::vector<int>& which) {
    std::vector<int> out;
    for (int k : which) out.push_back(dims[static_cast<std::size_t>(k)]);
    return out;
}

}  // namespace detail

/// Partial trace onto the listed factors (kept in the listed order).
inline DensityOperator reduce(const FactorState& psi, const std::vector<int>& keep) {
    for (int k : keep) {
        if (k < 0 || k >= static_cast<int>(psi.dims.size())) throw std::out_of_range("factor index");
    }
    const auto traced = detail::complement(keep, psi.dims.size());
    const auto kd = detail::sub_dims(psi.dims, keep);
    const auto td = detail::sub_dims(psi.dims, traced);
    const int dk = total_dim(kd);
    const int dt = total_dim(td);
    // Reshape into a dk x dt matrix M; rho = M M^dagger.
    Mat m = Mat::Zero(dk, dt);
    for (int i = 0; i < psi.amp.size(); ++i) {
        const auto dg = detail::digits(i, psi.dims);
        m(detail::compose(dg, psi.dims, keep), detail::compose(dg, psi.dims, traced)) += psi.amp(i);
    }
    return {m * m.adjoint(), kd};
}

/// Squared Schmidt coefficients across (part, rest), largest first.
inline std::vector<double> schmidt_spectrum(const FactorState& psi, const std::vector<int>& part) {
    const auto rest = detail::complement(part, psi.dims.size());
    const int da = total_dim(detail::sub_dims(psi.dims, part));
    const int db = total_dim(detail::sub_dims(psi.dims, rest));
    Mat m = Mat::Zero(da, db);
    for (int i = 0; i < psi.amp.size(); ++i) {
        const auto dg = detail::digits(i, psi.dims);
        m(detail::compose(dg, psi.dims, part), detail::compose(dg, psi.dims, rest)) += psi.amp(i);
    }
    Eigen::JacobiSVD<Mat> svd(m);
    std::vector<double> out;
    for (int i = 0; i < svd.singularValues().size(); ++i) out.push_back(svd.singularValues()(i) * svd.singularValues()(i));
    return out;
}

inline double purity(const DensityOperator& rho) { return rho.purity(); }

/// Projects one factor onto `onto` and drops it (unnormalized).
inline FactorState restrict(const FactorState& psi, int factor, const Vec& onto) {
    if (factor < 0 || factor >= static_cast<int>(psi.dims.size())) throw std::out_of_range("factor index");
    if (onto.size() != psi.dims[static_cast<std::size_t>(factor)]) throw std::invalid_argument("projector dimension");
    std::vector<int> keep = detail::complement({factor}, psi.dims.size());
    FactorState out{Vec::Zero(total_dim(detail::sub_dims(psi.dims, keep))), detail::sub_dims(psi.dims, keep)};
    for (int i = 0; i < psi.amp.size(); ++i) {
        const auto dg = detail::digits(i, psi.dims);
        out.amp(detail::compose(dg, psi.dims, keep)) += std::conj(onto(dg[static_cast<std::size_t>(factor)])) * psi.amp(i);
    }
    return out;
}

/// Appends an environment qubit that copies the given factor's basis value
/// with overlap cos(theta): |0> stays |e0>, |1> maps to cos|e0> + sin|e1>.
inline FactorState attach_copy(const FactorState& psi, int factor, double theta) {
    FactorState out{Vec::Zero(psi.amp.size() * 2), psi.dims};
    out.dims.push_back(2);
    const auto n = psi.amp.size();
    for (int i = 0; i < n; ++i) {
        const auto dg = detail::digits(i, psi.dims);
        if (dg[static_cast<std::size_t>(factor)] == 0) {
            out.amp(i) += psi.amp(i);
        } else {
            out.amp(i) += std::cos(theta) * psi.amp(i);
            out.amp(i + n) += std::sin(theta) * psi.amp(i);
        }
    }
    return out;
}

inline double fidelity(const FactorState& a, const FactorState& b) {
    if (a.amp.size() != b.amp.size()) throw std::invalid_argument("dimension mismatch");
    const double na = a.amp.squaredNorm();
    const double nb = b.amp.squaredNorm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::norm(a.amp.dot(b.amp)) / (na * nb);
}

/// The displayed D2-conditioned state with its printed coefficients
/// (1/2 outside, 1/(4 sqrt 2) on the mixed-gate term), normalized.
inline FactorState printed_d2_state() {
    FactorState s{Vec::Zero(8), {2, 2, 2}};
    auto at = [&](int p, int b, int c) -> cplx& { return s.amp(p + 2 * (b + 2 * c)); };
    at(0, 0, 0) += 0.5;
    at(1, 1, 1) += 0.5;
    const double w = 0.5 / (4.0 * std::sqrt(2.0));
    for (int p = 0; p < 2; ++p) {
        at(p, 0, 1) += w;
        at(p, 1, 0) += w;
    }
    return s.normalized();
}

/// The displayed Alice-Bob state (|D2^H,RH> + |D2^V,RV> + sqrt2 |D2^+,R+>)/2, normalized.
inline FactorState printed_alice_bob_state() {
    FactorState s{Vec::Zero(4), {2, 2}};
    s.amp(0 + 2 * 0) += 0.5;
    s.amp(1 + 2 * 1) += 0.5;
    for (int p = 0; p < 2; ++p) {
        for (int b = 0; b < 2; ++b) s.amp(p + 2 * b) += 0.5 * std::sqrt(2.0) * 0.5;
    }
    return s.normalized();
}

/// The Alice-Bob state carried by the D2 branch once Charlie's register is
/// found in |R+>.
inline FactorState alice_bob_restriction(const FactorState& d2_state) {
    return restrict(d2_state, 2, plus_state()).normalized();
}

inline std::string basis_label(int index, const std::vector<int>& dims) {
    static const char* pol[] = {"H", "V"};
    static const char* gate[] = {"RH", "RV"};
    static const char* loc[] = {"Src", "ArmB", "ArmC", "D1", "D2", "DB", "DC"};
    std::string out;
    if (static_cast<int>(dims.size()) == 4 && dims[0] == kLocations) {
        const auto dg = detail::digits(index, dims);
        return std::string(loc[dg[0]]) + "|" + pol[dg[1]] + "|" + gate[dg[2]] + "|" + gate[dg[3]];
    }
    const auto dg = detail::digits(index, dims);
    for (std::size_t k = 0; k < dg.size(); ++k) {
        if (!out.empty()) out += '|';
        if (k == 0) out += pol[dg[k] & 1];
        else if (k < 3) out += gate[dg[k] & 1];
        else out += std::to_string(dg[k]);
    }
    return out;
}

inline void write_amplitudes_csv(std::ostream& os, const FactorState& s) {
    os << "basis,re,im\n";
    for (int i = 0; i < s.amp.size(); ++i) {
        os << basis_label(i, s.dims) << ',' << s.amp(i).real() << ',' << s.amp(i).imag() << '\n';
    }
}

}  // namespace cqds::hilbert
