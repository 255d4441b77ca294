#include "rdhybrid/micro.hpp"

#include <array>

#include <algorithm>
#include <cmath>

#include "rdhybrid/bd_contact.hpp"
#include "rdhybrid/special.hpp"

namespace rdhybrid {

Vec3 reflect_into_box(Vec3 p, const BoxDomain& box) {
    for (int a = 0; a < 3; ++a) {
        const double lo = box.lower[a];
        const double hi = box.upper[a];
        const double L = hi - lo;
        double x = p[a];
        if (x < lo || x >= hi) {
            double u = std::fmod(x - lo, 2.0 * L);
            if (u < 0.0) u += 2.0 * L;
            if (u > L) u = 2.0 * L - u;
            x = lo + u;
        }
        if (x >= hi) x = std::nextafter(hi, lo);
        if (x < lo) x = lo;
        p[a] = x;
    }
    return p;
}

MicroSolver::MicroSolver(const Network& net, const CartesianMesh& mesh, const RateTable& rates, Rng& rng,
                         IdSource& ids, MicroOptions opts)
    : net_(net), mesh_(mesh), rates_(rates), rng_(rng), ids_(ids), opts_(opts),
      z_(normal_upper_quantile(opts.p_protect)) {
    counts_.assign(net.species_count(), 0);
}

std::size_t MicroSolver::add(Particle p) {
    p.scale = Scale::Micro;
    p.pos = reflect_into_box(p.pos, mesh_.domain());
    p.voxel = mesh_.locate(p.pos);
    parts_.push_back(p);
    alive_.push_back(1);
    step_start_.push_back(p.pos);
    domain_of_.push_back(MicroDomain::kNone - parts_.size());
    ++counts_[p.species];
    ++population_;
    return parts_.size() - 1;
}

std::size_t MicroSolver::spawn(SpeciesId s, const Vec3& pos, double t) {
    Particle p;
    p.id = ids_.take();
    p.species = s;
    p.pos = pos;
    p.birth = t;
    return add(p);
}

void MicroSolver::remove(std::size_t index) {
    if (!alive_[index]) return;
    alive_[index] = 0;
    --counts_[parts_[index].species];
    --population_;
}

std::vector<Particle> MicroSolver::extract_if(const std::function<bool(const Particle&)>& pred) {
    std::vector<Particle> out;
    for (std::size_t i = 0; i < parts_.size(); ++i)
        if (alive_[i] && pred(parts_[i])) {
            out.push_back(parts_[i]);
            remove(i);
        }
    return out;
}

std::vector<Particle> MicroSolver::live_particles() const {
    std::vector<Particle> out;
    for (std::size_t i = 0; i < parts_.size(); ++i)
        if (alive_[i]) out.push_back(parts_[i]);
    return out;
}

void MicroSolver::set_position(std::size_t i, const Vec3& p) {
    parts_[i].pos = reflect_into_box(p, mesh_.domain());
    parts_[i].voxel = mesh_.locate(parts_[i].pos);
}

double MicroSolver::gap(std::size_t i, std::size_t k) const {
    return norm(parts_[i].pos - parts_[k].pos) - net_.spec(parts_[i].species).sigma -
           net_.spec(parts_[k].species).sigma;
}

MicroSolver::PairGeom MicroSolver::pair_geom(std::size_t a, std::size_t b) const {
    const auto& sa = net_.spec(parts_[a].species);
    const auto& sb = net_.spec(parts_[b].species);
    PairGeom g;
    const double D = sa.D + sb.D;
    g.params = {sa.sigma + sb.sigma, D, net_.bimolecular_total(parts_[a].species, parts_[b].species)};
    g.D_com = D > 0.0 ? sa.D * sb.D / D : 0.0;
    g.wa = D > 0.0 ? sa.D / D : 0.5;
    g.wb = D > 0.0 ? sb.D / D : 0.5;
    return g;
}

namespace {

double protective_step(double gap, double D, double sigma, double z, double rms_fraction) {
    if (!(D > 0.0)) return kInf;
    const double g = std::max(gap, 0.0);
    const double dt = (0.5 * g) * (0.5 * g) / (2.0 * D * z * z);
    const double floor = (rms_fraction * sigma) * (rms_fraction * sigma) / (6.0 * D);
    return std::max(dt, floor);
}

}  // namespace

void MicroSolver::for_each_candidate_pair(const std::vector<std::size_t>& reactive,
                                          const std::function<void(std::size_t, std::size_t)>& f,
                                          double& reach) const {
    reach = kInf;
    const BoxDomain& box = mesh_.domain();
    const Vec3 e = box.extent();
    const double shortest = std::min({e.x, e.y, e.z});
    double sigma = 0.0;
    for (std::size_t i : reactive) sigma = std::max(sigma, net_.spec(parts_[i].species).sigma);
    // Cells hold about two particles each but are never narrower than a few
    // contact distances.
    auto cells = static_cast<std::int64_t>(std::floor(std::cbrt(static_cast<double>(reactive.size()) / 2.0)));
    if (sigma > 0.0) cells = std::min(cells, static_cast<std::int64_t>(shortest / (8.0 * sigma)));
    if (reactive.size() < 64 || cells < 3) {
        for (std::size_t x = 0; x < reactive.size(); ++x)
            for (std::size_t y = x + 1; y < reactive.size(); ++y) f(reactive[x], reactive[y]);
        return;
    }
    const std::int64_t n = std::min<std::int64_t>(cells, 64);
    reach = shortest / static_cast<double>(n);
    auto cell_of = [&](const Vec3& p) {
        std::array<std::int64_t, 3> c{};
        for (int a = 0; a < 3; ++a)
            c[a] = std::clamp<std::int64_t>(static_cast<std::int64_t>((p[a] - box.lower[a]) / e[a] * n), 0, n - 1);
        return c;
    };
    std::vector<std::vector<std::size_t>> grid(static_cast<std::size_t>(n * n * n));
    for (std::size_t i : reactive) {
        const auto c = cell_of(parts_[i].pos);
        grid[static_cast<std::size_t>(c[0] + n * (c[1] + n * c[2]))].push_back(i);
    }
    for (std::size_t i : reactive) {
        const auto c = cell_of(parts_[i].pos);
        for (std::int64_t dz = -1; dz <= 1; ++dz)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    const std::int64_t x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
                    if (x < 0 || y < 0 || z < 0 || x >= n || y >= n || z >= n) continue;
                    for (std::size_t k : grid[static_cast<std::size_t>(x + n * (y + n * z))])
                        if (k > i) f(i, k);
                }
    }
}

std::vector<MicroDomain> MicroSolver::decompose(double window) const {
    std::vector<std::size_t> reactive;
    for (std::size_t i = 0; i < parts_.size(); ++i)
        if (alive_[i] && net_.has_partners(parts_[i].species)) reactive.push_back(i);

    // Pairs are only enumerated within `reach` of each other; particles with
    // no reactive neighbour that close stay single.
    double reach = kInf;
    std::vector<std::size_t> nearest(parts_.size(), MicroDomain::kNone);
    std::vector<double> nearest_gap(parts_.size(), kInf);
    for_each_candidate_pair(reactive, [&](std::size_t i, std::size_t k) {
        if (!net_.reactive(parts_[i].species, parts_[k].species)) return;
        const double g = gap(i, k);
        if (g < nearest_gap[i]) nearest_gap[i] = g, nearest[i] = k;
        if (g < nearest_gap[k]) nearest_gap[k] = g, nearest[k] = i;
    }, reach);

    std::vector<MicroDomain> domains;
    std::vector<std::size_t> domain_index(parts_.size(), MicroDomain::kNone);
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        if (!alive_[i] || domain_index[i] != MicroDomain::kNone) continue;
        const std::size_t k = nearest[i];
        MicroDomain d;
        d.a = i;
        d.dt = window;
        if (k != MicroDomain::kNone && nearest[k] == i) {
            d.b = k;
            domain_index[k] = domains.size();
        }
        domain_index[i] = domains.size();
        domains.push_back(d);
    }

    // Protective step against every reactive particle outside the domain.
    for_each_candidate_pair(reactive, [&](std::size_t i, std::size_t k) {
        if (domain_index[i] == domain_index[k]) return;
        if (!net_.reactive(parts_[i].species, parts_[k].species)) return;
        const auto& si = net_.spec(parts_[i].species);
        const auto& sk = net_.spec(parts_[k].species);
        const double dt = protective_step(gap(i, k), si.D + sk.D, si.sigma + sk.sigma, z_, opts_.bd_rms_fraction);
        auto& di = domains[domain_index[i]];
        auto& dk = domains[domain_index[k]];
        di.dt = std::min(di.dt, dt);
        dk.dt = std::min(dk.dt, dt);
    }, reach);
    if (std::isfinite(reach)) {
        // Pairs that were not enumerated are at least `reach` apart.
        double D = 0.0;
        double sigma = 0.0;
        for (std::size_t i : reactive) {
            D = std::max(D, net_.spec(parts_[i].species).D);
            sigma = std::max(sigma, net_.spec(parts_[i].species).sigma);
        }
        const double cap = protective_step(reach - 2.0 * sigma, 2.0 * D, 2.0 * sigma, z_, opts_.bd_rms_fraction);
        for (auto& d : domains) d.dt = std::min(d.dt, cap);
    }
    return domains;
}

double MicroSolver::micro_meso_rate(std::size_t i, const MesoPartners* meso) const {
    if (!meso) return 0.0;
    const SpeciesId s = parts_[i].species;
    double rate = 0.0;
    for (SpeciesId partner : net_.partners_of(s)) {
        const auto n = meso->count(parts_[i].voxel, partner);
        if (n == 0) continue;
        for (std::size_t c : net_.bimolecular_of(s, partner)) rate += rates_.reactions[c].k_meso * static_cast<double>(n);
    }
    return rate;
}

// The analytic kernel ignores walls: keep the pair away from them.
double MicroSolver::wall_cap(std::size_t a, std::size_t b) const {
    const BoxDomain& box = mesh_.domain();
    double dw = kInf;
    double dmax = 0.0;
    for (std::size_t m : {a, b}) {
        const double Dm = net_.spec(parts_[m].species).D;
        if (!(Dm > 0.0)) continue;
        for (int x = 0; x < 3; ++x) dw = std::min({dw, parts_[m].pos[x] - box.lower[x], box.upper[x] - parts_[m].pos[x]});
        dmax = std::max(dmax, Dm);
    }
    if (!(dmax > 0.0)) return kInf;
    const auto g = pair_geom(a, b);
    const double floor = std::pow(opts_.bd_rms_fraction * g.params.sigma, 2) / (6.0 * g.params.D);
    return std::max(dw * dw / (z_ * z_ * 2.0 * dmax), floor);
}

double MicroSolver::global_step(const std::vector<MicroDomain>& domains, double horizon, const MesoPartners* meso) const {
    double dt = horizon;
    for (const auto& d : domains) {
        dt = std::min(dt, d.dt);
        if (!d.is_pair() || opts_.force_fallback) continue;
        const auto g = pair_geom(d.a, d.b);
        if (norm(parts_[d.a].pos - parts_[d.b].pos) >= opts_.cutoff_factor * g.params.sigma) continue;
        dt = std::min(dt, wall_cap(d.a, d.b));
    }
    if (meso) {
        // Voxel tracking for micro-meso channels.
        const double h = mesh_.h();
        for (std::size_t i = 0; i < parts_.size(); ++i) {
            if (!alive_[i]) continue;
            const SpeciesId s = parts_[i].species;
            const double D = net_.spec(s).D;
            if (!(D > 0.0)) continue;
            bool any = false;
            for (SpeciesId partner : net_.partners_of(s)) any = any || meso->total(partner) > 0;
            if (any) dt = std::min(dt, 0.25 * h * h / (6.0 * D));
        }
    }
    return dt;
}

void MicroSolver::move_free(std::size_t i, double dt) {
    const double D = net_.spec(parts_[i].species).D;
    if (!(D > 0.0) || !(dt > 0.0)) return;
    set_position(i, parts_[i].pos + rng_.gaussian_vec(std::sqrt(2.0 * D * dt)));
}

std::vector<std::size_t> MicroSolver::place_products(const std::vector<SpeciesId>& products, const Vec3& where,
                                                     double t) {
    std::vector<std::size_t> out;
    if (products.empty()) return out;
    if (products.size() == 1) {
        out.push_back(spawn(products[0], where, t));
        return out;
    }
    const auto& s1 = net_.spec(products[0]);
    const auto& s2 = net_.spec(products[1]);
    const double sigma = s1.sigma + s2.sigma;
    const double D = s1.D + s2.D;
    const double w1 = D > 0.0 ? s1.D / D : 0.5;
    const double w2 = 1.0 - w1;
    const Vec3 u = rng_.unit_vector();
    Vec3 p1 = where + (w1 * sigma) * u;
    Vec3 p2 = where - (w2 * sigma) * u;
    // Rigid shift into the box keeps the contact separation exact.
    const BoxDomain& box = mesh_.domain();
    for (int a = 0; a < 3; ++a) {
        const double lo = std::min(p1[a], p2[a]);
        const double hi = std::max(p1[a], p2[a]);
        double shift = 0.0;
        if (lo < box.lower[a]) shift = box.lower[a] - lo;
        else if (hi >= box.upper[a]) shift = std::nextafter(box.upper[a], box.lower[a]) - hi;
        p1[a] += shift;
        p2[a] += shift;
    }
    out.push_back(spawn(products[0], p1, t));
    out.push_back(spawn(products[1], p2, t));
    return out;
}

std::vector<std::size_t> MicroSolver::fire_pair_reaction(std::size_t a, std::size_t b, const Vec3& where, double t) {
    const SpeciesId sa = parts_[a].species;
    const SpeciesId sb = parts_[b].species;
    const auto& chans = net_.bimolecular_of(sa, sb);
    double pick = rng_.uniform() * net_.bimolecular_total(sa, sb);
    std::size_t chosen = chans.back();
    for (std::size_t c : chans) {
        pick -= net_.reactions()[c].rate;
        if (pick < 0.0) {
            chosen = c;
            break;
        }
    }
    remove(a);
    remove(b);
    auto products = place_products(net_.reactions()[chosen].products, reflect_into_box(where, mesh_.domain()), t);
    if (on_reaction) on_reaction({t, chosen, Scale::Micro});
    return products;
}

std::vector<std::size_t> MicroSolver::fire_particle_event(std::size_t i, double t, bool micro_meso, MesoPartners* meso,
                                                          VoxelIndex v) {
    const SpeciesId s = parts_[i].species;
    const Vec3 where = parts_[i].pos;
    std::size_t chosen = 0;
    if (!micro_meso) {
        const auto& chans = net_.unimolecular_of(s);
        double pick = rng_.uniform() * net_.unimolecular_total(s);
        chosen = chans.back();
        for (std::size_t c : chans) {
            pick -= net_.reactions()[c].rate;
            if (pick < 0.0) {
                chosen = c;
                break;
            }
        }
    } else {
        // The partner must still be in the voxel the rate was drawn for;
        // otherwise it was consumed earlier in the step and nothing happens.
        double total = 0.0;
        for (SpeciesId sp : net_.partners_of(s))
            for (std::size_t c : net_.bimolecular_of(s, sp))
                total += rates_.reactions[c].k_meso * static_cast<double>(meso->count(v, sp));
        if (!(total > 0.0)) return {i};
        double pick = rng_.uniform() * total;
        SpeciesId partner = net_.partners_of(s).front();
        bool found = false;
        for (SpeciesId sp : net_.partners_of(s)) {
            const auto n = meso->count(v, sp);
            if (n == 0) continue;
            for (std::size_t c : net_.bimolecular_of(s, sp)) {
                chosen = c;
                partner = sp;
                pick -= rates_.reactions[c].k_meso * static_cast<double>(n);
                if (pick < 0.0) {
                    found = true;
                    break;
                }
            }
            if (found) break;
        }
        meso->consume(v, partner, t);
    }
    remove(i);
    auto products = place_products(net_.reactions()[chosen].products, where, t);
    if (on_reaction) on_reaction({t, chosen, Scale::Micro});
    return products;
}

void MicroSolver::process_single(std::size_t i, double t0, double t1, MesoPartners* meso) {
    if (!alive_[i] || !(t1 > t0)) return;
    const double dt = t1 - t0;
    const VoxelIndex v = parts_[i].voxel;
    const double tu = rng_.exponential(net_.unimolecular_total(parts_[i].species));
    const double tm = rng_.exponential(micro_meso_rate(i, meso));
    const double te = std::min(tu, tm);
    if (te < dt) {
        move_free(i, te);
        const auto products = fire_particle_event(i, t0 + te, tm < tu, meso, v);
        process_group(products, t0 + te, t1, meso);
    } else {
        move_free(i, dt);
    }
}

void MicroSolver::process_group(const std::vector<std::size_t>& group, double t0, double t1, MesoPartners* meso) {
    if (group.empty()) return;
    // Pair the closest reactive couple of the group (groups hold at most three particles).
    std::size_t pa = MicroDomain::kNone;
    std::size_t pb = MicroDomain::kNone;
    double best = kInf;
    for (std::size_t x = 0; x < group.size(); ++x)
        for (std::size_t y = x + 1; y < group.size(); ++y) {
            const std::size_t i = group[x];
            const std::size_t k = group[y];
            if (!alive_[i] || !alive_[k] || !net_.reactive(parts_[i].species, parts_[k].species)) continue;
            const double g = gap(i, k);
            if (g < best) best = g, pa = i, pb = k;
        }
    if (pa != MicroDomain::kNone) {
        const std::size_t id = MicroDomain::kNone / 2 + pa;
        domain_of_[pa] = domain_of_[pb] = id;
        process_pair(pa, pb, t0, t1, meso);
    }
    for (std::size_t i : group)
        if (i != pa && i != pb) process_single(i, t0, t1, meso);
}

void MicroSolver::process_pair(std::size_t a, std::size_t b, double t0, double t1, MesoPartners* meso) {
    double t = t0;
    while (t < t1 && alive_[a] && alive_[b]) {
        const PairGeom g = pair_geom(a, b);
        const double sigma = g.params.sigma;
        const VoxelIndex voxels[2] = {parts_[a].voxel, parts_[b].voxel};
        // Competing single-particle events of the two members.
        const double clocks[4] = {rng_.exponential(net_.unimolecular_total(parts_[a].species)),
                                  rng_.exponential(micro_meso_rate(a, meso)),
                                  rng_.exponential(net_.unimolecular_total(parts_[b].species)),
                                  rng_.exponential(micro_meso_rate(b, meso))};
        const int which = static_cast<int>(std::min_element(clocks, clocks + 4) - clocks);
        const double t_other = clocks[which];
        const bool other_fires = t_other < t1 - t;
        const double t_stop = other_fires ? t + t_other : t1;

        Vec3 r = parts_[a].pos - parts_[b].pos;
        Vec3 R = g.wb * parts_[a].pos + g.wa * parts_[b].pos;
        double tau = t;
        auto write_back = [&](const Vec3& Rn, const Vec3& rn) {
            set_position(a, Rn + g.wa * rn);
            set_position(b, Rn - g.wb * rn);
        };

        if (!opts_.force_fallback && norm(r) < opts_.cutoff_factor * sigma) {
            // A pair that entered the cutoff mid-step may be close to a wall.
            const double H = std::min(t_stop - t, wall_cap(a, b));
            if (norm(r) < sigma) r = norm(r) > 0.0 ? r * (sigma / norm(r)) : sigma * rng_.unit_vector();
            const auto ev = sample_pair_event(g.params, norm(r), H, rng_);
            ++n_analytic_;
            if (ev.reacted) {
                const Vec3 where = R + rng_.gaussian_vec(std::sqrt(2.0 * g.D_com * ev.t));
                const auto products = fire_pair_reaction(a, b, where, t + ev.t);
                process_group(products, t + ev.t, t1, meso);
                return;
            }
            const Vec3 Rn = R + rng_.gaussian_vec(std::sqrt(2.0 * g.D_com * H));
            write_back(Rn, propagate_relative(g.params, r, H, rng_));
            if (t + H < t_stop) {
                t += H;
                continue;
            }
            tau = t_stop;
        } else {
            bool entered = false;
            while (tau < t_stop) {
                const double d = norm(r);
                double rms = opts_.bd_rms_fraction * sigma;
                if (opts_.adaptive_fallback) rms = std::max(rms, (d - sigma) / (2.0 * z_));
                const double dts = std::min(rms * rms / (6.0 * g.params.D), t_stop - tau);
                const Vec3 proposal = r + rng_.gaussian_vec(std::sqrt(2.0 * g.params.D * dts));
                const Vec3 Rn = R + rng_.gaussian_vec(std::sqrt(2.0 * g.D_com * dts));
                const auto cs = contact_step(g.params, r, proposal, dts, rng_);
                ++n_fallback_;
                tau += dts;
                if (cs.reacted) {
                    const auto products = fire_pair_reaction(a, b, Rn, tau);
                    process_group(products, tau, t1, meso);
                    return;
                }
                write_back(Rn, cs.r);
                r = parts_[a].pos - parts_[b].pos;
                R = g.wb * parts_[a].pos + g.wa * parts_[b].pos;
                if (!opts_.force_fallback && norm(r) < opts_.cutoff_factor * sigma && tau < t_stop) {
                    entered = true;
                    break;
                }
            }
            if (entered) {
                t = tau;
                continue;
            }
        }
        t = tau;
        if (other_fires && t >= t_stop) {
            const std::size_t who = which < 2 ? a : b;
            const std::size_t other = which < 2 ? b : a;
            auto group = fire_particle_event(who, t, which % 2 == 1, meso, voxels[which / 2]);
            group.push_back(other);
            process_group(group, t, t1, meso);
            return;
        }
    }
}

void MicroSolver::resolve_overlaps(double dt) {
    std::vector<std::size_t> reactive;
    for (std::size_t i = 0; i < parts_.size(); ++i)
        if (alive_[i] && net_.has_partners(parts_[i].species)) reactive.push_back(i);
    double reach = kInf;
    for_each_candidate_pair(reactive, [&](std::size_t i, std::size_t k) {
        if (!alive_[i] || !alive_[k] || !net_.reactive(parts_[i].species, parts_[k].species)) return;
        const PairGeom g = pair_geom(i, k);
        Vec3 r = parts_[i].pos - parts_[k].pos;
        const double d = norm(r);
        if (d >= g.params.sigma) return;
        const Vec3 R = g.wb * parts_[i].pos + g.wa * parts_[k].pos;
        if (domain_of_[i] == domain_of_[k]) {
            // Wall reflection pushed an analytic pair into contact: separate only.
            const Vec3 dir = d > 0.0 ? r * (1.0 / d) : rng_.unit_vector();
            const Vec3 rn = (g.params.sigma * (1.0 + 1e-12)) * dir;
            set_position(i, R + g.wa * rn);
            set_position(k, R - g.wb * rn);
            return;
        }
        Vec3 r_old = step_start_[i] - step_start_[k];
        if (norm(r_old) < g.params.sigma) {
            const double n0 = norm(r_old);
            r_old = (n0 > 0.0 ? r_old * (1.0 / n0) : rng_.unit_vector()) * g.params.sigma;
        }
        const auto cs = contact_step(g.params, r_old, r, dt, rng_);
        if (cs.reacted) {
            fire_pair_reaction(i, k, R, now_ + dt);
            return;
        }
        set_position(i, R + g.wa * cs.r);
        set_position(k, R - g.wb * cs.r);
    }, reach);
}

void MicroSolver::run(double t_end, SampleBuffer* samples, std::size_t& next_sample, MesoPartners* meso) {
    auto record_at_or_before = [&](double t) {
        if (!samples) return;
        while (next_sample < samples->times.size() && samples->times[next_sample] <= t &&
               samples->times[next_sample] < t_end) {
            auto& row = samples->counts[next_sample];
            for (std::size_t s = 0; s < counts_.size(); ++s) row[s] += counts_[s];
            ++next_sample;
        }
    };
    while (now_ < t_end && !stop_requested) {
        record_at_or_before(now_);
        double horizon_end = t_end;
        if (samples && next_sample < samples->times.size() && samples->times[next_sample] < t_end)
            horizon_end = std::min(horizon_end, samples->times[next_sample]);
        if (population_ == 0) {
            now_ = horizon_end;
            continue;
        }

        // Compact away dead slots between steps.
        if (parts_.size() > 64 && static_cast<std::size_t>(population_) * 2 < parts_.size()) {
            std::size_t w = 0;
            for (std::size_t i = 0; i < parts_.size(); ++i)
                if (alive_[i]) parts_[w++] = parts_[i];
            parts_.resize(w);
            alive_.assign(w, 1);
            step_start_.resize(w);
            domain_of_.resize(w);
        }
        for (std::size_t i = 0; i < parts_.size(); ++i) step_start_[i] = parts_[i].pos;

        const auto domains = decompose(horizon_end - now_);
        const double dt = global_step(domains, horizon_end - now_, meso);
        for (std::size_t d = 0; d < domains.size(); ++d) {
            domain_of_[domains[d].a] = d;
            if (domains[d].is_pair()) domain_of_[domains[d].b] = d;
        }
        const double t0 = now_;
        const double t1 = (horizon_end - now_ <= dt) ? horizon_end : now_ + dt;
        for (const auto& d : domains) {
            if (d.is_pair()) process_pair(d.a, d.b, t0, t1, meso);
            else process_single(d.a, t0, t1, meso);
        }
        resolve_overlaps(t1 - t0);
        now_ = t1;
        ++n_steps_;
    }
    if (stop_requested) return;
    record_at_or_before(now_);
    now_ = t_end;
}

}  // namespace rdhybrid
