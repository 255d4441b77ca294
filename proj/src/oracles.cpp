#include "rdhybrid/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rdhybrid/bd_contact.hpp"
#include "rdhybrid/micro.hpp"

namespace rdhybrid {

RadialGrid make_radial_grid(double sigma, double D, double k_a, double r0, double t_min, double t_max,
                            std::size_t n_r, double r_max) {
    RadialGrid g;
    g.sigma = sigma;
    g.D = D;
    g.k_a = k_a;
    const double R = std::max(r_max, r0 + 20.0 * sigma + 6.0 * std::sqrt(2.0 * D * t_max));
    const double L = R - sigma;
    const double first = std::min(1e-3 * sigma, 0.02 * std::sqrt(2.0 * D * std::max(t_min, 0.0)) + 1e-300);
    const double d0 = std::min(first, L / static_cast<double>(n_r));
    // Ratio q with d0 (q^n - 1) / (q - 1) = L.
    const auto span = [&](double q) {
        return std::abs(q - 1.0) < 1e-14 ? d0 * n_r : d0 * (std::pow(q, static_cast<double>(n_r)) - 1.0) / (q - 1.0);
    };
    double lo = 1.0;
    double hi = 2.0;
    while (span(hi) < L) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (span(mid) < L ? lo : hi) = mid;
    }
    const double q = 0.5 * (lo + hi);
    g.r.resize(n_r + 1);
    g.r[0] = sigma;
    double d = d0;
    for (std::size_t i = 1; i <= n_r; ++i) {
        g.r[i] = g.r[i - 1] + d;
        d *= q;
    }
    g.r[n_r] = R;
    return g;
}

namespace {

RadialGrid refine(const RadialGrid& g) {
    RadialGrid f = g;
    f.r.clear();
    for (std::size_t i = 0; i + 1 < g.r.size(); ++i) {
        f.r.push_back(g.r[i]);
        f.r.push_back(0.5 * (g.r[i] + g.r[i + 1]));
    }
    f.r.push_back(g.r.back());
    return f;
}

std::vector<double> time_levels(const std::vector<double>& times, std::size_t n) {
    double t_min = kInf;
    double t_max = 0.0;
    for (double t : times)
        if (t > 0.0) {
            t_min = std::min(t_min, t);
            t_max = std::max(t_max, t);
        }
    std::vector<double> levels{0.0};
    if (t_max <= 0.0) return levels;
    const double lo = 1e-3 * t_min;
    const double ratio = std::pow(t_max / lo, 1.0 / static_cast<double>(n - 1));
    double t = lo;
    for (std::size_t i = 0; i < n; ++i, t *= ratio) levels.push_back(std::min(t, t_max));
    for (double x : times)
        if (x > 0.0) levels.push_back(x);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end(),
                             [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(a, b); }),
                 levels.end());
    return levels;
}

// Backward equation for v = r * E[f]: v_t = D v'', v'(sigma) = lambda v(sigma),
// v(R) = 0, v(r, 0) = r f(r).
std::vector<double> solve_backward(const RadialGrid& g, const std::function<double(double)>& f, double r0,
                                   const std::vector<double>& times, std::size_t n_levels) {
    const std::size_t n = g.r.size() - 1;  // v[n] = 0
    const double D = g.D;
    const double lambda = (1.0 + g.k_a / (4.0 * kPi * g.sigma * g.D)) / g.sigma;
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) v[i] = g.r[i] * f(g.r[i]);
    v[n] = 0.0;

    // L v_i = lo_i v_{i-1} + di_i v_i + up_i v_{i+1}
    std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0);
    {
        const double h0 = g.r[1] - g.r[0];
        di[0] = -2.0 * D * (1.0 + h0 * lambda) / (h0 * h0);
        up[0] = 2.0 * D / (h0 * h0);
        for (std::size_t i = 1; i < n; ++i) {
            const double hm = g.r[i] - g.r[i - 1];
            const double hp = g.r[i + 1] - g.r[i];
            const double c = 2.0 * D / (hm + hp);
            lo[i] = c / hm;
            up[i] = c / hp;
            di[i] = -(lo[i] + up[i]);
        }
    }

    const auto value_at_r0 = [&]() {
        auto it = std::upper_bound(g.r.begin(), g.r.end(), r0);
        if (it == g.r.begin()) return v[0] / g.r[0];
        if (it == g.r.end()) return 0.0;
        const std::size_t k = static_cast<std::size_t>(it - g.r.begin());
        const double w = (r0 - g.r[k - 1]) / (g.r[k] - g.r[k - 1]);
        return ((1.0 - w) * v[k - 1] + w * v[k]) / r0;
    };

    std::vector<double> out(times.size(), 0.0);
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    std::size_t next = 0;
    while (next < order.size() && times[order[next]] <= 0.0) out[order[next++]] = value_at_r0();

    const auto levels = time_levels(times, n_levels);
    std::vector<double> a(n), b(n), c(n), rhs(n);
    for (std::size_t k = 1; k < levels.size() && next < order.size(); ++k) {
        const double dt = levels[k] - levels[k - 1];
        // Implicit Euler start-up damps the nonsmooth initial data.
        const double theta = k <= 4 ? 1.0 : 0.5;
        for (std::size_t i = 0; i < n; ++i) {
            double lv = di[i] * v[i] + up[i] * v[i + 1];
            if (i > 0) lv += lo[i] * v[i - 1];
            rhs[i] = v[i] + (1.0 - theta) * dt * lv;
            a[i] = -theta * dt * lo[i];
            b[i] = 1.0 - theta * dt * di[i];
            c[i] = -theta * dt * up[i];
        }
        for (std::size_t i = 1; i < n; ++i) {
            const double m = a[i] / b[i - 1];
            b[i] -= m * c[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        v[n - 1] = rhs[n - 1] / b[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) v[i] = (rhs[i] - c[i] * v[i + 1]) / b[i];
        while (next < order.size() && std::abs(times[order[next]] - levels[k]) <= 1e-14 * levels[k])
            out[order[next++]] = value_at_r0();
    }
    return out;
}

}  // namespace

std::vector<double> pde_expectation(const std::function<double(double)>& f, double r0, double sigma, double k_a,
                                    double D, const std::vector<double>& times, const PdeOptions& opts) {
    if (!(r0 >= sigma)) throw std::invalid_argument("pde oracle: r0 must be >= sigma");
    if (!(D > 0.0) || !(sigma > 0.0) || k_a < 0.0) throw std::invalid_argument("pde oracle: invalid parameters");
    double t_min = kInf;
    double t_max = 0.0;
    for (double t : times)
        if (t > 0.0) {
            t_min = std::min(t_min, t);
            t_max = std::max(t_max, t);
        }
    const RadialGrid coarse = make_radial_grid(sigma, D, k_a, r0, t_min, t_max, opts.n_r, opts.r_max);
    if (!opts.richardson) return solve_backward(coarse, f, r0, times, opts.time_levels);
    const auto c = solve_backward(coarse, f, r0, times, opts.time_levels);
    const auto fine = solve_backward(refine(coarse), f, r0, times, 2 * opts.time_levels);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, std::abs(c[i] - fine[i]));
    if (worst > opts.richardson_tol) {
        std::ostringstream msg;
        msg << "pde oracle: n_r = " << opts.n_r << " and " << 2 * opts.n_r << " differ by " << worst << " > "
            << opts.richardson_tol;
        throw GridResolutionError(msg.str());
    }
    return fine;
}

std::vector<double> pde_survival(double r0, double sigma, double k_a, double D, const std::vector<double>& times,
                                 const PdeOptions& opts) {
    return pde_expectation([](double) { return 1.0; }, r0, sigma, k_a, D, times, opts);
}

std::vector<double> pde_separation_histogram(double r0, double sigma, double k_a, double D, double t,
                                             const std::vector<double>& edges, const PdeOptions& opts) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double a = edges[i];
        const double b = edges[i + 1];
        out.push_back(pde_expectation([a, b](double r) { return r >= a && r < b ? 1.0 : 0.0; }, r0, sigma, k_a, D,
                                      {t}, opts)[0]);
    }
    return out;
}

std::vector<double> bd_pair_survival(const PairParams& p, double r0, double dt, const std::vector<double>& times,
                                     std::size_t n, Rng& rng) {
    double t_max = 0.0;
    for (double t : times) t_max = std::max(t_max, t);
    const auto steps = static_cast<std::uint64_t>(std::ceil(t_max / dt - 1e-9));
    const double s = std::sqrt(2.0 * p.D * dt);
    std::vector<double> reacted_at;
    reacted_at.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Vec3 r{r0, 0.0, 0.0};
        double when = kInf;
        for (std::uint64_t j = 0; j < steps; ++j) {
            const auto st = contact_step(p, r, r + rng.gaussian_vec(s), dt, rng);
            if (st.reacted) {
                when = static_cast<double>(j + 1) * dt;
                break;
            }
            r = st.r;
        }
        reacted_at.push_back(when);
    }
    std::vector<double> out;
    for (double t : times) {
        const auto alive = std::count_if(reacted_at.begin(), reacted_at.end(), [&](double x) { return x > t + 1e-12 * dt; });
        out.push_back(static_cast<double>(alive) / static_cast<double>(n));
    }
    return out;
}

BdSimulator::BdSimulator(const Network& net, const BoxDomain& box, Rng& rng, IdSource& ids, BdOptions opts)
    : net_(net), box_(box), rng_(rng), ids_(ids), opts_(opts) {
    counts_.assign(net.species_count(), 0);
    if (opts_.dt) {
        dt_bd_ = *opts_.dt;
    } else {
        dt_bd_ = kInf;
        for (SpeciesId a = 0; a < net.species_count(); ++a)
            for (SpeciesId b = a; b < net.species_count(); ++b) {
                if (!net.reactive(a, b)) continue;
                const double D = net.spec(a).D + net.spec(b).D;
                const double sigma = net.spec(a).sigma + net.spec(b).sigma;
                if (D > 0.0) dt_bd_ = std::min(dt_bd_, std::pow(opts_.rms_fraction * sigma, 2) / (6.0 * D));
            }
        if (!std::isfinite(dt_bd_)) {
            // No bimolecular reactions: the step only has to resolve the box.
            double D = 0.0;
            for (const auto& s : net.species()) D = std::max(D, s.D);
            const Vec3 e = box.extent();
            const double L = std::min({e.x, e.y, e.z});
            dt_bd_ = D > 0.0 ? std::pow(0.01 * L, 2) / (6.0 * D) : kInf;
        }
    }
}

std::size_t BdSimulator::insert(SpeciesId s, const Vec3& pos, double t) {
    Slot slot;
    slot.p.id = ids_.take();
    slot.p.species = s;
    slot.p.scale = Scale::Micro;
    slot.p.pos = reflect_into_box(pos, box_);
    slot.p.birth = t;
    slot.alive = true;
    slot.clock = t + rng_.exponential(net_.unimolecular_total(s));
    std::size_t i;
    // Indices stay stable while a step holds pair lists.
    if (!free_.empty() && !in_step_) {
        i = free_.back();
        free_.pop_back();
        slots_[i] = slot;
    } else {
        i = slots_.size();
        slots_.push_back(slot);
    }
    ++counts_[s];
    ++population_;
    return i;
}

void BdSimulator::add(Particle p) {
    const std::size_t i = insert(p.species, p.pos, p.birth);
    slots_[i].p.id = p.id;
    if (p.id >= ids_.next) ids_.next = p.id + 1;
    // The clock is memoryless, so it restarts at the current time.
    slots_[i].clock = std::max(now_, p.birth) + rng_.exponential(net_.unimolecular_total(p.species));
}

void BdSimulator::kill(std::size_t i) {
    slots_[i].alive = false;
    --counts_[slots_[i].p.species];
    --population_;
    free_.push_back(i);
}

std::vector<Particle> BdSimulator::live_particles() const {
    std::vector<Particle> out;
    for (const auto& s : slots_)
        if (s.alive) out.push_back(s.p);
    return out;
}

void BdSimulator::place_products(const std::vector<SpeciesId>& products, const Vec3& where, double t) {
    if (products.empty()) return;
    if (products.size() == 1) {
        insert(products[0], where, t);
        return;
    }
    const auto& s1 = net_.spec(products[0]);
    const auto& s2 = net_.spec(products[1]);
    const double sigma = s1.sigma + s2.sigma;
    const double D = s1.D + s2.D;
    const double w1 = D > 0.0 ? s1.D / D : 0.5;
    const Vec3 u = rng_.unit_vector();
    Vec3 p1 = where + (w1 * sigma) * u;
    Vec3 p2 = where - ((1.0 - w1) * sigma) * u;
    for (int a = 0; a < 3; ++a) {
        const double lo = std::min(p1[a], p2[a]);
        const double hi = std::max(p1[a], p2[a]);
        double shift = 0.0;
        if (lo < box_.lower[a]) shift = box_.lower[a] - lo;
        else if (hi >= box_.upper[a]) shift = std::nextafter(box_.upper[a], box_.lower[a]) - hi;
        p1[a] += shift;
        p2[a] += shift;
    }
    insert(products[0], p1, t);
    insert(products[1], p2, t);
}

void BdSimulator::fire_unimolecular(std::size_t i, double t) {
    const SpeciesId s = slots_[i].p.species;
    const auto& chans = net_.unimolecular_of(s);
    double pick = rng_.uniform() * net_.unimolecular_total(s);
    std::size_t chosen = chans.back();
    for (std::size_t c : chans) {
        pick -= net_.reactions()[c].rate;
        if (pick < 0.0) {
            chosen = c;
            break;
        }
    }
    const Vec3 where = slots_[i].p.pos;
    kill(i);
    place_products(net_.reactions()[chosen].products, where, t);
    if (on_reaction) on_reaction({t, chosen, Scale::Micro});
}

void BdSimulator::fire_pair(std::size_t i, std::size_t k, double t) {
    const SpeciesId si = slots_[i].p.species;
    const SpeciesId sk = slots_[k].p.species;
    const auto& chans = net_.bimolecular_of(si, sk);
    double pick = rng_.uniform() * net_.bimolecular_total(si, sk);
    std::size_t chosen = chans.back();
    for (std::size_t c : chans) {
        pick -= net_.reactions()[c].rate;
        if (pick < 0.0) {
            chosen = c;
            break;
        }
    }
    const double Di = net_.spec(si).D;
    const double Dk = net_.spec(sk).D;
    const double D = Di + Dk;
    const Vec3 where = D > 0.0 ? (Dk / D) * slots_[i].p.pos + (Di / D) * slots_[k].p.pos
                               : 0.5 * (slots_[i].p.pos + slots_[k].p.pos);
    kill(i);
    kill(k);
    place_products(net_.reactions()[chosen].products, reflect_into_box(where, box_), t);
    if (on_reaction) on_reaction({t, chosen, Scale::Micro});
}

// Contact handling for one reactive pair after both members moved over dt.
// Returns true when the pair reacted.
bool BdSimulator::contact(std::size_t i, std::size_t k, const Vec3& ri_old, const Vec3& rk_old, double dt, double t) {
    const SpeciesId si = slots_[i].p.species;
    const SpeciesId sk = slots_[k].p.species;
    const double Di = net_.spec(si).D;
    const double Dk = net_.spec(sk).D;
    const double D = Di + Dk;
    PairParams pp{net_.spec(si).sigma + net_.spec(sk).sigma, D, net_.bimolecular_total(si, sk)};
    Vec3& xi = slots_[i].p.pos;
    Vec3& xk = slots_[k].p.pos;
    const Vec3 r_new = xi - xk;
    ++n_contact_;
    const auto st = contact_step(pp, ri_old - rk_old, r_new, dt, rng_);
    if (st.reacted) {
        fire_pair(i, k, t);
        return true;
    }
    if (st.r.x != r_new.x || st.r.y != r_new.y || st.r.z != r_new.z) {
        const Vec3 R = (Dk / D) * xi + (Di / D) * xk;
        xi = reflect_into_box(R + (Di / D) * st.r, box_);
        xk = reflect_into_box(R - (Dk / D) * st.r, box_);
    }
    return false;
}

void BdSimulator::record(SampleBuffer& samples, std::size_t k) const {
    for (std::size_t s = 0; s < counts_.size(); ++s) samples.counts[k][s] += counts_[s];
}

// One macro step no longer than horizon; returns its length.
double BdSimulator::step(double horizon) {
    in_step_ = true;
    const std::size_t n = slots_.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };

    double dt = horizon;
    for (std::size_t i = 0; i < n; ++i)
        if (slots_[i].alive) dt = std::min(dt, slots_[i].clock - now_);
    dt = std::max(dt, 0.0);

    struct Pair {
        std::size_t i, k;
    };
    std::vector<Pair> pairs;
    double protect = kInf;
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots_[i].alive) continue;
        const SpeciesId si = slots_[i].p.species;
        if (!net_.has_partners(si)) continue;
        for (std::size_t k = i + 1; k < n; ++k) {
            if (!slots_[k].alive) continue;
            const SpeciesId sk = slots_[k].p.species;
            if (!net_.reactive(si, sk)) continue;
            const double Dik = net_.spec(si).D + net_.spec(sk).D;
            if (Dik <= 0.0) continue;
            const double sigma = net_.spec(si).sigma + net_.spec(sk).sigma;
            const double gap = norm(slots_[i].p.pos - slots_[k].p.pos) - sigma;
            pairs.push_back({i, k});
            if (gap < opts_.cluster_gap * sigma) {
                parent[find(i)] = find(k);
            } else {
                protect = std::min(protect, std::pow(gap / opts_.z_protect, 2) / (2.0 * Dik));
            }
        }
    }
    dt = std::min(dt, std::max(protect, dt_bd_));

    std::vector<char> clustered(n, 0);
    for (const auto& p : pairs)
        if (find(p.i) == find(p.k)) clustered[p.i] = clustered[p.k] = 1;

    // Clusters advance in lockstep at the contact step; the macro step ends at
    // the first cluster reaction.
    double done = dt;
    if (std::any_of(clustered.begin(), clustered.end(), [](char c) { return c != 0; })) {
        const auto sub = static_cast<std::uint64_t>(std::max(1.0, std::ceil(dt / dt_bd_ - 1e-9)));
        const double h = dt / static_cast<double>(sub);
        std::vector<Vec3> old(n);
        for (std::uint64_t j = 0; j < sub; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!clustered[i] || !slots_[i].alive) continue;
                old[i] = slots_[i].p.pos;
                const double D = net_.spec(slots_[i].p.species).D;
                slots_[i].p.pos = reflect_into_box(old[i] + rng_.gaussian_vec(std::sqrt(2.0 * D * h)), box_);
            }
            bool reacted = false;
            const double t = now_ + static_cast<double>(j + 1) * h;
            for (const auto& p : pairs) {
                if (!clustered[p.i] || find(p.i) != find(p.k)) continue;
                if (!slots_[p.i].alive || !slots_[p.k].alive) continue;
                if (contact(p.i, p.k, old[p.i], old[p.k], h, t)) reacted = true;
            }
            ++n_macro_;
            if (reacted) {
                done = static_cast<double>(j + 1) * h;
                break;
            }
        }
    }

    std::vector<Vec3> start(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots_[i].alive || i >= clustered.size() || clustered[i]) continue;
        start[i] = slots_[i].p.pos;
        const double D = net_.spec(slots_[i].p.species).D;
        if (D > 0.0) slots_[i].p.pos = reflect_into_box(start[i] + rng_.gaussian_vec(std::sqrt(2.0 * D * done)), box_);
    }
    const double t_end = now_ + done;
    // Crossings the protective step did not prevent.
    for (const auto& p : pairs) {
        if (find(p.i) == find(p.k) && clustered[p.i]) continue;
        if (!slots_[p.i].alive || !slots_[p.k].alive) continue;
        const double sigma = net_.spec(slots_[p.i].p.species).sigma + net_.spec(slots_[p.k].p.species).sigma;
        if (norm(slots_[p.i].p.pos - slots_[p.k].p.pos) >= sigma) continue;
        const Vec3 oi = clustered[p.i] ? slots_[p.i].p.pos : start[p.i];
        const Vec3 ok = clustered[p.k] ? slots_[p.k].p.pos : start[p.k];
        contact(p.i, p.k, oi, ok, done, t_end);
    }
    for (std::size_t i = 0; i < n; ++i)
        if (slots_[i].alive && slots_[i].clock <= t_end * (1.0 + 1e-14)) fire_unimolecular(i, t_end);
    ++n_macro_;
    in_step_ = false;
    return done;
}

void BdSimulator::run(double t_end, SampleBuffer* samples, std::size_t& next_sample) {
    while (!stop_requested) {
        if (samples) {
            while (next_sample < samples->times.size() && samples->times[next_sample] < t_end &&
                   samples->times[next_sample] <= now_ * (1.0 + 1e-14))
                record(*samples, next_sample++);
        }
        if (now_ >= t_end) break;
        double horizon = t_end - now_;
        if (samples && next_sample < samples->times.size())
            horizon = std::min(horizon, samples->times[next_sample] - now_);
        const double done = step(horizon);
        now_ = done >= horizon ? now_ + horizon : now_ + done;
        if (samples && next_sample < samples->times.size() && done >= horizon &&
            samples->times[next_sample] < t_end)
            now_ = std::max(now_, samples->times[next_sample]);
    }
    if (!stop_requested) now_ = t_end;
}

}  // namespace rdhybrid
