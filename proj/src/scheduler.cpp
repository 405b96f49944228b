#include "lorasim/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lorasim/phy.hpp"

namespace lorasim {

Scheduler::Scheduler(SchedulerConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.channels < 1 || cfg_.slots_per_frame < 1)
        throw std::invalid_argument("resource grid must have at least one channel and slot");
    cells_.resize(static_cast<std::size_t>(cfg_.channels) * cfg_.slots_per_frame);
    reserved_.assign(cells_.size(), false);
    for (auto [c, s] : cfg_.reserved) {
        if (c < 0 || c >= cfg_.channels || s < 0 || s >= cfg_.slots_per_frame)
            throw std::invalid_argument("reserved cell outside the grid");
        reserved_[cell_index(c, s)] = true;
    }
}

bool Scheduler::is_reserved(int channel, int slot) const {
    return reserved_[cell_index(channel, slot)];
}

bool Scheduler::cell_occupied(int channel, int slot) const {
    int idx = cell_index(channel, slot);
    return reserved_[idx] || !cells_[idx].empty();
}

int Scheduler::nominal_capacity() const {
    int reserved = static_cast<int>(std::count(reserved_.begin(), reserved_.end(), true));
    return cfg_.channels * cfg_.slots_per_frame - reserved;
}

double Scheduler::channel_load(int channel) const {
    if (channel < 0 || channel >= cfg_.channels)
        throw std::invalid_argument("channel index out of range");
    int occupied = 0;
    for (int s = 0; s < cfg_.slots_per_frame; ++s)
        if (cell_occupied(channel, s)) ++occupied;
    return static_cast<double>(occupied) / cfg_.slots_per_frame;
}

int Scheduler::reclaim_expired(double t_now_ms, double t_release_ms) {
    std::vector<int> expired;
    for (const auto& [id, rec] : table_)
        if (t_now_ms - rec.t_last_ms > t_release_ms) expired.push_back(id);
    for (int id : expired) {
        release_device(table_.at(id));
        table_.erase(id);
        AllocationLogRow row;
        row.t_ms = t_now_ms;
        row.dev_id = id;
        row.type = 'X';
        log_.push_back(std::move(row));
    }
    return static_cast<int>(expired.size());
}

void Scheduler::release_device(const DeviceRecord& rec) {
    for (int s = rec.first_slot; s < rec.first_slot + rec.n_slots; ++s) {
        auto& occ = cells_[cell_index(rec.channel, s)];
        std::erase_if(occ, [&](const Occupant& o) { return o.dev_id == rec.dev_id; });
    }
}

std::vector<DeviceSchedule> Scheduler::cell_occupants(int channel, int slot) const {
    std::vector<DeviceSchedule> out;
    for (const Occupant& o : cells_[cell_index(channel, slot)])
        out.push_back(DeviceSchedule{o.dev_id, o.k, o.g, slot, channel});
    return out;
}

// Offset usable across every cell of the run without clashing with any
// current occupant; nullopt when the run is full at this periodicity.
std::optional<int> Scheduler::free_offset_for_run(int channel, int first_slot, int n_slots,
                                                  int k) const {
    std::vector<DeviceSchedule> merged;
    for (int s = first_slot; s < first_slot + n_slots; ++s) {
        if (reserved_[cell_index(channel, s)]) return std::nullopt;
        auto occ = cell_occupants(channel, s);
        merged.insert(merged.end(), occ.begin(), occ.end());
    }
    OffsetAssignment a = assign_group_offset(merged, k, cfg_.k_max);
    if (!a.ok) return std::nullopt;
    return a.g;
}

// Offset minimizing the number of clashing residue classes when a clash is
// unavoidable (reuse grants share the cell by design).
int Scheduler::best_effort_offset(int channel, int first_slot, int n_slots, int k) const {
    if (auto g = free_offset_for_run(channel, first_slot, n_slots, k)) return *g;
    long p = 1L << k;
    int best_g = 0;
    int best_clashes = -1;
    for (long g = 0; g < p; ++g) {
        int clashes = 0;
        for (int s = first_slot; s < first_slot + n_slots; ++s)
            for (const Occupant& o : cells_[cell_index(channel, s)]) {
                long p_min = 1L << std::min(k, o.k);
                if ((g % p_min) == (o.g % p_min)) ++clashes;
            }
        if (best_clashes < 0 || clashes < best_clashes) {
            best_clashes = clashes;
            best_g = static_cast<int>(g);
        }
    }
    return best_g;
}

void Scheduler::occupy(int channel, int first_slot, int n_slots, const Occupant& occ) {
    for (int s = first_slot; s < first_slot + n_slots; ++s)
        cells_[cell_index(channel, s)].push_back(occ);
}

void Scheduler::log_event(double t_ms, int dev_id, char type, const AllocationResult& res) {
    AllocationLogRow row;
    row.t_ms = t_ms;
    row.dev_id = dev_id;
    row.type = type;
    row.channel = res.channel;
    row.first_slot = res.first_slot;
    row.n_slots = res.n_slots;
    row.is_reuse = res.is_reuse;
    row.loads.reserve(cfg_.channels);
    for (int c = 0; c < cfg_.channels; ++c) row.loads.push_back(channel_load(c));
    log_.push_back(std::move(row));
}

void Scheduler::report_seen(int dev_id, double t_now_ms) {
    if (auto it = table_.find(dev_id); it != table_.end()) it->second.t_last_ms = t_now_ms;
}

bool Scheduler::multislot_quota_ok(int n_multi_current, int n_new, double rho_max) const {
    double total = static_cast<double>(cfg_.channels) * cfg_.slots_per_frame;
    return (n_multi_current + n_new) / total <= rho_max;
}

int Scheduler::multi_slots_in_use() const {
    int n = 0;
    for (const auto& [id, rec] : table_)
        if (rec.n_slots > 1) n += rec.n_slots;
    return n;
}

AllocationResult Scheduler::allocate(const AllocationRequest& req, double t_now_ms) {
    AllocationResult result;
    if (req.k < 0 || req.k > cfg_.k_max) {
        result.reason = "period exponent outside the superframe depth";
        return result;
    }

    // Idempotent re-join: release any existing allocation first.
    if (auto it = table_.find(req.dev_id); it != table_.end()) {
        release_device(it->second);
        table_.erase(it);
    }

    int needed = required_slots(req.sf, req.payload_bytes, cfg_.slot_ms, req.is_multi);
    bool degraded = false;
    if (req.is_multi &&
        !multislot_quota_ok(multi_slots_in_use(), needed, cfg_.rho_max)) {
        if (cfg_.hard_reject_over_quota) {
            result.reason = "multi-slot quota exhausted";
            return result;
        }
        needed = 1;  // degrade to a single-slot grant, keeping the device connected
        degraded = true;
    }

    // Candidate set: every run of `needed` consecutive cells that can host
    // the new residue class. Chosen by lowest channel load, ties broken by
    // lowest channel index, then lowest starting slot.
    int best_channel = -1, best_slot = -1, best_g = 0;
    double best_load = 0.0;
    for (int c = 0; c < cfg_.channels; ++c) {
        double load = channel_load(c);
        if (best_channel >= 0 && load > best_load) continue;
        for (int s = 0; s + needed <= cfg_.slots_per_frame; ++s) {
            auto g = free_offset_for_run(c, s, needed, req.k);
            if (!g) continue;
            // Channels iterate in ascending order, so on a load tie the
            // earlier channel already stored wins.
            if (best_channel < 0 || load < best_load) {
                best_channel = c;
                best_slot = s;
                best_g = *g;
                best_load = load;
            }
            break;  // later slots on this channel cannot beat this run
        }
    }

    if (best_channel >= 0) {
        occupy(best_channel, best_slot, needed, Occupant{req.dev_id, req.k, best_g});
        result.ok = true;
        result.channel = best_channel;
        result.first_slot = best_slot;
        result.n_slots = needed;
        result.g = best_g;
        result.is_reuse = false;
        result.degraded = degraded;
    } else {
        // Saturation: reuse the block of the lowest-priority, longest-idle
        // device. The victim keeps transmitting; the block becomes shared.
        if (!cfg_.reuse_enabled) {
            result.reason = "no free resource block and reuse is disabled";
            return result;
        }
        const DeviceRecord* victim = nullptr;
        for (const auto& [id, rec] : table_) {
            if (cfg_.reuse_requires_higher_priority && !(req.priority > rec.priority))
                continue;
            if (!victim) { victim = &rec; continue; }
            double idle = t_now_ms - rec.t_last_ms;
            double victim_idle = t_now_ms - victim->t_last_ms;
            if (rec.priority < victim->priority ||
                (rec.priority == victim->priority && idle > victim_idle) ||
                (rec.priority == victim->priority && idle == victim_idle &&
                 rec.dev_id < victim->dev_id))
                victim = &rec;
        }
        if (!victim) {
            result.reason = "no reusable block (no eligible victim)";
            return result;
        }
        int grant_slots = needed;
        if (victim->n_slots < needed) {
            grant_slots = 1;  // cannot evict several victims for one request
            degraded = true;
        }
        int g = best_effort_offset(victim->channel, victim->first_slot, grant_slots, req.k);
        occupy(victim->channel, victim->first_slot, grant_slots,
               Occupant{req.dev_id, req.k, g});
        result.ok = true;
        result.channel = victim->channel;
        result.first_slot = victim->first_slot;
        result.n_slots = grant_slots;
        result.g = g;
        result.is_reuse = true;
        result.degraded = degraded;
    }

    DeviceRecord rec;
    rec.dev_id = req.dev_id;
    rec.channel = result.channel;
    rec.first_slot = result.first_slot;
    rec.n_slots = result.n_slots;
    rec.t_last_ms = t_now_ms;
    rec.priority = req.priority;
    rec.is_reuse = result.is_reuse;
    rec.is_multi = result.n_slots > 1;
    rec.k = req.k;
    rec.g = result.g;
    table_[req.dev_id] = rec;
    log_event(t_now_ms, req.dev_id, 'Q', result);
    return result;
}

double control_overhead_eta(double t_up_s, double t_session_s) {
    if (t_up_s <= 0.0 || t_session_s <= 0.0)
        throw std::invalid_argument("reporting interval and session duration must be positive");
    return 2.0 * t_up_s / t_session_s;
}

int required_slots(int sf, int payload_bytes, double slot_len_ms, bool is_multi) {
    if (slot_len_ms <= 0.0)
        throw std::invalid_argument("slot length must be positive");
    if (!is_multi) return 1;
    RadioConfig radio;
    radio.sf = sf;
    radio.validate();
    double toa = time_on_air_ms(radio, payload_bytes);
    return static_cast<int>(std::ceil(toa / slot_len_ms));
}

} // namespace lorasim
