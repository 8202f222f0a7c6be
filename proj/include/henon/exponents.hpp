#pragma once

#include <cmath>
#include <compare>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include "henon/error.hpp"

namespace henon {

/// A real number or +infinity. Infinity is a tag, never a floating sentinel.
class ExtReal {
public:
    static ExtReal finite(double v) {
        if (!std::isfinite(v)) throw DomainError("ExtReal::finite: non-finite value");
        return ExtReal(v, false);
    }
    static ExtReal infinity() { return ExtReal(0.0, true); }

    bool is_finite() const { return !inf_; }
    bool is_infinite() const { return inf_; }

    double value() const {
        if (inf_) throw DomainError("ExtReal::value: value is +infinity");
        return v_;
    }
    /// Value as a double, with +infinity mapped to HUGE_VAL (for printing only).
    double to_double() const { return inf_ ? std::numeric_limits<double>::infinity() : v_; }

    friend bool operator==(const ExtReal& a, const ExtReal& b) {
        return a.inf_ == b.inf_ && (a.inf_ || a.v_ == b.v_);
    }
    friend std::weak_ordering operator<=>(const ExtReal& a, const ExtReal& b) {
        if (a.inf_ || b.inf_) return a.inf_ <=> b.inf_;
        if (a.v_ < b.v_) return std::weak_ordering::less;
        if (a.v_ > b.v_) return std::weak_ordering::greater;
        return std::weak_ordering::equivalent;
    }
    friend bool operator==(const ExtReal& a, double b) { return !a.inf_ && a.v_ == b; }
    friend std::weak_ordering operator<=>(const ExtReal& a, double b) {
        return a <=> ExtReal::finite(b);
    }

    std::string str() const;

private:
    ExtReal(double v, bool inf) : v_(v), inf_(inf) {}
    double v_;
    bool inf_;
};

inline std::string ExtReal::str() const {
    if (inf_) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v_);
    return buf;
}

inline std::ostream& operator<<(std::ostream& os, const ExtReal& e) { return os << e.str(); }

inline void check_sigma(double sigma) {
    if (!(sigma > -2.0) || !std::isfinite(sigma)) throw DomainError("sigma must be > -2");
}

/// p_S = (N+2sigma+2)/(N-2), +inf for N in {1,2}.
inline ExtReal p_sobolev(int N, double sigma) {
    check_sigma(sigma);
    if (N < 1) throw DomainError("p_sobolev: N must be >= 1");
    if (N <= 2) return ExtReal::infinity();
    return ExtReal::finite((N + 2.0 * sigma + 2.0) / (N - 2.0));
}

/// Both closed forms of the Joseph-Lundgren exponent.
struct JosephLundgren {
    ExtReal value = ExtReal::infinity();
    double form1 = std::numeric_limits<double>::infinity();
    double form2 = std::numeric_limits<double>::infinity();

    double relative_disagreement() const {
        if (value.is_infinite()) return 0.0;
        return std::abs(form1 - form2) / std::abs(form2);
    }
};

inline JosephLundgren p_joseph_lundgren_forms(int N, double sigma) {
    check_sigma(sigma);
    if (N < 3) throw DomainError("p_joseph_lundgren: N must be >= 3");
    JosephLundgren r;
    const double n = N;
    if (!(n > 10.0 + 4.0 * sigma)) return r;
    const double s2 = sigma + 2.0;
    const double root = std::sqrt((2.0 * n + sigma - 2.0) * s2);
    const double nm2 = n - 2.0;
    const double np = n + sigma;
    r.form1 = (nm2 * nm2 - 2.0 * np * s2 + 2.0 * s2 * std::sqrt(np * np - nm2 * nm2)) /
              (nm2 * (n - 10.0 - 4.0 * sigma));
    r.form2 = 1.0 + 2.0 * s2 / (n - 4.0 - sigma - root);
    r.value = ExtReal::finite(r.form2);
    if (r.relative_disagreement() > 1e-9)
        throw std::logic_error("p_joseph_lundgren: closed forms disagree");
    return r;
}

inline ExtReal p_joseph_lundgren(int N, double sigma) {
    return p_joseph_lundgren_forms(N, sigma).value;
}

/// Lepin exponent. j = 1 gives p_L (sigma >= 0) or its sigma < 0 analogue;
/// for sigma >= 2j the finite value p_{L,j} is returned.
/// j >= 2 with sigma < 2j has no closed form and is a domain error.
inline ExtReal p_lepin(int N, double sigma, int j = 1) {
    check_sigma(sigma);
    if (j < 1) throw DomainError("p_lepin: j must be >= 1");
    const double n = N;
    const double tj = 2.0 * j;
    if (sigma >= tj) {
        const double d = sigma - tj;
        const double jj = (j + 1.0) * (j + 1.0);
        return ExtReal::finite(d * (n - 2.0 + d) / ((n - 2.0) * d + 4.0 * jj));
    }
    if (j != 1) throw DomainError("p_lepin: j >= 2 requires sigma >= 2j");
    if (sigma >= 0.0) {
        if (n > 2.0 * (10.0 - sigma) / (2.0 - sigma))
            return ExtReal::finite((2.0 - sigma) * (n + sigma - 4.0) /
                                   (n * (2.0 - sigma) - 2.0 * (10.0 - sigma)));
        return ExtReal::infinity();
    }
    if (n > (2.0 * sigma - 4.0) / sigma)
        return ExtReal::finite(sigma * (n - 2.0 + sigma) / (sigma * (n - 2.0) + 4.0));
    return ExtReal::infinity();
}

/// Validated (N, sigma, p).
struct RegimeParams {
    int N;
    double sigma;
    double p;

    RegimeParams(int N_, double sigma_, double p_) : N(N_), sigma(sigma_), p(p_) {
        if (N < 3) throw DomainError("N must be >= 3");
        check_sigma(sigma);
        if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("p must be > 1");
    }

    /// N > 10 + 4 sigma and p > p_JL(sigma).
    bool supercritical_regime() const {
        if (!(N > 10.0 + 4.0 * sigma)) return false;
        return p_joseph_lundgren(N, sigma) < p;
    }
};

struct DerivedConstants {
    double alpha;    ///< (sigma+2)/(2(p-1))
    double C_sigma;  ///< amplitude of the stationary solution
    double Z0;       ///< stationary level in phase space
    double A;        ///< N-2-2a
    double B;        ///< (sigma+2)(N-2-a)
    double a;        ///< (sigma+2)/(p-1), minus the stationary slope Y
    double b;        ///< 1/a
};

inline DerivedConstants profile_constants(const RegimeParams& prm) {
    const double n = prm.N, s = prm.sigma, p = prm.p;
    if (!((n - 2.0) * p > n + s)) throw DomainError("profile_constants: need (N-2)p > N+sigma");
    DerivedConstants c{};
    c.a = (s + 2.0) / (p - 1.0);
    c.b = (p - 1.0) / (s + 2.0);
    c.alpha = 0.5 * c.a;
    // Written as a(N-2-a) so that the stationary line is an exact zero of the phase field.
    c.Z0 = c.a * ((n - 2.0) - c.a);
    c.C_sigma = std::pow(c.Z0, 1.0 / (p - 1.0));
    c.A = n - 2.0 - 2.0 * c.a;
    c.B = (s + 2.0) * (n - 2.0 - c.a);
    return c;
}

struct TheoryPrediction {
    ExtReal p_S = ExtReal::infinity();
    ExtReal p_JL = ExtReal::infinity();
    ExtReal p_L_or_pbarL = ExtReal::infinity();
    double discriminant = 0.0;  ///< A^2 - 4B
    bool discriminant_negative = false;
    std::optional<double> lepin_gap;
    std::optional<int> zero_count;
    bool existence = false;  ///< gap > 8 (sigma >= 0) or gap > 4 (sigma < 0)
    int multiplicity_lower_bound = 0;
    bool conjectured_nonexistence = false;
    bool outside_hypotheses = false;  ///< sigma < 0 and the dimension condition fails
};

/// Zero count j+2 for 4(j+1) < gap <= 4(j+2); 1 for gap <= 4.
inline int zero_count_from_gap(double gap) {
    if (gap <= 4.0) return 1;
    return static_cast<int>(std::ceil(gap / 4.0));
}

/// N >= 2(2-sigma)/(sigma+2), the extra dimension condition for sigma < 0.
inline bool negative_sigma_dimension_condition(const RegimeParams& prm) {
    return prm.N >= 2.0 * (2.0 - prm.sigma) / (prm.sigma + 2.0);
}

inline int predicted_multiplicity(const RegimeParams& prm) {
    const double s = prm.sigma;
    const ExtReal pjl = p_joseph_lundgren(prm.N, s);
    if (!(pjl < prm.p)) return 0;
    if (s >= 2.0) {
        int k = 0;
        while (s >= 4.0 * (k + 1) - 2.0) ++k;
        return k;
    }
    if (s >= 0.0) return p_lepin(prm.N, s) > prm.p ? 1 : 0;
    if (!negative_sigma_dimension_condition(prm)) return 0;
    return p_lepin(prm.N, s) > prm.p ? 1 : 0;
}

inline bool conjectured_nonexistence(const RegimeParams& prm) {
    if (prm.sigma >= 2.0) return false;
    if (prm.sigma > 0.0 || prm.sigma < 0.0) return !(p_lepin(prm.N, prm.sigma) > prm.p);
    return false;
}

inline TheoryPrediction lepin_gap(const RegimeParams& prm) {
    TheoryPrediction t;
    t.p_S = p_sobolev(prm.N, prm.sigma);
    t.p_JL = p_joseph_lundgren(prm.N, prm.sigma);
    if (prm.sigma < 2.0) t.p_L_or_pbarL = p_lepin(prm.N, prm.sigma);
    else t.p_L_or_pbarL = p_lepin(prm.N, prm.sigma, 1);
    t.multiplicity_lower_bound = predicted_multiplicity(prm);
    t.conjectured_nonexistence = conjectured_nonexistence(prm);
    t.outside_hypotheses = prm.sigma < 0.0 && !negative_sigma_dimension_condition(prm);

    const DerivedConstants c = profile_constants(prm);
    t.discriminant = c.A * c.A - 4.0 * c.B;
    double disc = t.discriminant;
    if (std::abs(disc) <= 1e-12 * c.A * c.A) disc = 0.0;
    if (disc < 0.0) {
        t.discriminant_negative = true;
        return t;
    }
    const double gap = c.A - std::sqrt(disc);
    t.lepin_gap = gap;
    t.zero_count = zero_count_from_gap(gap);
    t.existence = prm.sigma >= 0.0 ? gap > 8.0 : gap > 4.0;
    return t;
}

}  // namespace henon
