#include "lorasim/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stack>
#include <vector>

#include "lorasim/clock.hpp"
#include "lorasim/events.hpp"
#include "lorasim/mac.hpp"
#include "lorasim/metrics.hpp"
#include "lorasim/rng.hpp"
#include "lorasim/scheduler.hpp"
#include "lorasim/superframe.hpp"
#include "lorasim/sync.hpp"

namespace lorasim {

namespace {

constexpr double kEps = 1e-9;
constexpr int kAuxControl = -1;

struct InFlight {
    Transmission tx;
    int node = -1;
    bool is_control = false;
    bool is_join = false;
    bool active = false;
};

struct ChannelState {
    int active = 0;
    std::vector<int> group;  // inflight indices of the open overlap group
};

struct Grant {
    long due_frame;
    int node;
    bool is_join;
};

struct Node {
    double x = 0.0, y = 0.0, dist = 1.0;
    ClockModel clock;
    double per_link_shadow_db = 0.0;

    // Synchronization status
    bool synced_once = false;
    double last_sync_ms = 0.0;
    int sync_failures = 0;
    bool suspended = false;
    bool resync_due = false;
    bool listening = false;
    bool initial_sync_done = false;
    SyncAttemptResult pending_sync;

    // Scheduled-access state
    FsmState fsm = FsmState::init;
    bool join_done = false;
    int join_attempts = 0;
    int req_attempts = 0;
    bool gave_up_alloc = false;
    bool alloc_failed_ever = false;
    bool has_alloc = false;
    DeviceSchedule sched;
    int n_slots = 1;

    bool operational = false;
    double operational_at_ms = -1.0;

    // MAC queue: one packet deep, newest wins
    bool has_pending = false;
    bool tx_scheduled = false;
    bool radio_busy = false;

    // CSMA attempt state
    bool in_backoff = false;
    int csma_stage = 0;
    int csma_channel = 0;

    EnergyLedger energy;
};

class Engine {
  public:
    Engine(const ScenarioConfig& cfg, std::uint64_t seed)
        : cfg_(cfg),
          seed_(seed),
          rng_(seed),
          metrics_(cfg.n_nodes, cfg.duration_ms(), cfg.segments, cfg.warmup_s * 1000.0),
          scheduler_(make_scheduler_config(cfg)) {
        toa_ms_ = cfg_.data_toa_ms();
        frame_ms_ = cfg_.frame_ms();
        powers_ = EnergyPowers{cfg_.energy_tx_mw, cfg_.energy_rx_mw, cfg_.energy_sleep_mw};
        beacons_ = BeaconSchedule{0.0, cfg_.beacon_period_s * 1000.0, cfg_.beacon_toa_ms, false};
        sync_policy_ = SyncPolicy{cfg_.sync_sigma_ms, cfg_.trunc_sigmas,
                                  cfg_.sync_retry_fraction, cfg_.beacon_loss,
                                  cfg_.holdover_max_failures};
        if (cfg_.protocol == MacPolicy::tdma) period_k_ = cfg_.device_period_exponent();
    }

    SimulationReport run();

  private:
    static SchedulerConfig make_scheduler_config(const ScenarioConfig& cfg) {
        SchedulerConfig sc;
        sc.channels = cfg.channels;
        sc.slots_per_frame = cfg.slots_per_frame;
        sc.slot_ms = cfg.slot_ms;
        sc.rho_max = cfg.rho_max;
        sc.reuse_enabled = cfg.reuse_enabled;
        sc.reuse_requires_higher_priority = cfg.reuse_requires_higher_priority;
        sc.k_max = cfg.k_max;
        if (cfg.protocol == MacPolicy::tdma && cfg.channels >= 1)
            sc.reserved = {{0, 0}};
        else
            sc.reserved = {};
        return sc;
    }

    // --- setup -------------------------------------------------------------

    void setup();
    void place_nodes();
    void boot_node(int i);

    // --- event handlers ----------------------------------------------------

    void on_data_ready(int i);
    void on_tx_start(int i, int aux);
    void on_tx_end(int inflight_idx);
    void on_frame_boundary(long frame);
    void on_sync_wakeup(int i, int aux);
    void on_backoff_expire(int i);

    // --- helpers -----------------------------------------------------------

    void try_dispatch(int i);
    void start_transmission(int i, bool is_control, int channel);
    void resolve_group(int channel);
    void handle_control_outcome(const InFlight& f, bool delivered);
    void schedule_access_attempt(int i, int attempts);
    void begin_sync_attempt(int i);
    void schedule_data_tx_tdma(int i);
    void schedule_data_tx_saloha(int i);
    void maybe_start_resync(int i);

    double shadow_draw() { return shadow_dist_(rng_.get(Stream::shadowing)); }
    double hw_jitter(int i) {
        double sigma = nodes_[i].clock.hw_jitter_sigma_ms;
        return truncated_normal(rng_.get(Stream::hw_jitter), sigma, 3.0 * sigma);
    }
    long frame_of(double t_ms) const { return static_cast<long>(std::floor(t_ms / frame_ms_ + kEps)); }
    double rx_power_dbm(int i);
    FsmState advance_fsm(int i, FsmEvent event) {
        Node& n = nodes_[i];
        FsmState from = n.fsm;
        n.fsm = fsm_step(from, event).next;
        if (cfg_.trace) {
            char buf[120];
            std::snprintf(buf, sizeof(buf), "%.6f,%d,%s,%s,%s", now_, i, to_string(event),
                          to_string(from), to_string(n.fsm));
            fsm_log_.emplace_back(buf);
        }
        return n.fsm;
    }
    void trace_event(const char* kind, int node, int channel, const std::string& detail) {
        if (!cfg_.trace) return;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.6f,%s,%d,%d,%s", now_, kind, node, channel,
                      detail.c_str());
        trace_.emplace_back(buf);
    }
    double channel_power_at_node_dbm(int i, int channel, double t_ms);
    int pick_channel() {
        std::uniform_int_distribution<int> d(0, cfg_.channels - 1);
        return d(rng_.get(Stream::channel_pick));
    }
    int alloc_inflight();

    // --- members -----------------------------------------------------------

    const ScenarioConfig& cfg_;
    std::uint64_t seed_;
    RngPool rng_;
    MetricsAccumulator metrics_;
    Scheduler scheduler_;
    EventQueue queue_;
    std::vector<Node> nodes_;
    std::vector<ChannelState> channels_;
    std::vector<InFlight> inflight_;
    std::stack<int> free_inflight_;
    std::vector<Grant> pending_grants_;
    std::normal_distribution<double> shadow_dist_;

    double now_ = 0.0;
    double toa_ms_ = 0.0;
    double frame_ms_ = 0.0;
    int period_k_ = 0;
    EnergyPowers powers_;
    BeaconSchedule beacons_;
    SyncPolicy sync_policy_;

    std::vector<std::string> trace_;
    std::vector<std::string> fsm_log_;
    long control_sent_ = 0;
    long control_delivered_ = 0;
    long reuse_grants_ = 0;
    long reclaimed_total_ = 0;
    long alloc_failures_ = 0;
    bool done_ = false;
};

double Engine::rx_power_dbm(int i) {
    Node& n = nodes_[i];
    double shadow = cfg_.shadow_mode == ShadowMode::per_packet ? shadow_draw()
                                                               : n.per_link_shadow_db;
    return cfg_.tx_power_dbm - path_loss_db(cfg_.link, n.dist, shadow);
}

double Engine::channel_power_at_node_dbm(int i, int channel, double t_ms) {
    double sum_mw = 0.0;
    auto& sense_rng = rng_.get(Stream::csma_sense);
    std::normal_distribution<double> sense_shadow(0.0, cfg_.link.shadow_sigma_db);
    for (int idx : channels_[channel].group) {
        const InFlight& f = inflight_[idx];
        if (!f.active || f.node == i) continue;
        if (t_ms < f.tx.start_time_ms || t_ms >= f.tx.start_time_ms + f.tx.toa_ms) continue;
        const Node& other = nodes_[f.node];
        double d = std::hypot(nodes_[i].x - other.x, nodes_[i].y - other.y);
        double shadow = cfg_.link.shadow_sigma_db > 0.0 ? sense_shadow(sense_rng) : 0.0;
        double p = cfg_.tx_power_dbm - path_loss_db(cfg_.link, d, shadow);
        sum_mw += std::pow(10.0, p / 10.0);
    }
    if (sum_mw <= 0.0) return -1e9;
    return 10.0 * std::log10(sum_mw);
}

int Engine::alloc_inflight() {
    if (!free_inflight_.empty()) {
        int idx = free_inflight_.top();
        free_inflight_.pop();
        return idx;
    }
    inflight_.push_back(InFlight{});
    return static_cast<int>(inflight_.size()) - 1;
}

void Engine::place_nodes() {
    nodes_.resize(cfg_.n_nodes);
    auto& rng = rng_.get(Stream::placement);
    std::uniform_real_distribution<double> pos(0.0, cfg_.area_m);
    std::uniform_real_distribution<double> drift(-cfg_.drift_ppm, cfg_.drift_ppm);
    std::normal_distribution<double> shadow(0.0, cfg_.link.shadow_sigma_db);
    double cx = cfg_.area_m / 2.0, cy = cfg_.area_m / 2.0;
    for (Node& n : nodes_) {
        n.x = pos(rng);
        n.y = pos(rng);
        n.dist = std::max(1.0, std::hypot(n.x - cx, n.y - cy));
        n.clock.drift_ppm = drift(rng);
        n.clock.hw_jitter_sigma_ms = cfg_.hw_sigma_ms;
        n.per_link_shadow_db = cfg_.link.shadow_sigma_db > 0.0 ? shadow(rng) : 0.0;
    }
}

void Engine::setup() {
    shadow_dist_ = std::normal_distribution<double>(0.0, cfg_.link.shadow_sigma_db);
    channels_.assign(cfg_.channels, ChannelState{});
    place_nodes();
    queue_.push(cfg_.duration_ms(), EventKind::sim_end);
    if (cfg_.protocol == MacPolicy::tdma)
        queue_.push(frame_ms_, EventKind::frame_boundary, -1, 1);

    auto& traffic = rng_.get(Stream::traffic);
    std::uniform_real_distribution<double> phase(0.0, cfg_.interval_ms());
    for (int i = 0; i < cfg_.n_nodes; ++i) {
        queue_.push(phase(traffic), EventKind::data_ready, i);
        boot_node(i);
    }
}

void Engine::boot_node(int i) {
    Node& n = nodes_[i];
    switch (cfg_.protocol) {
        case MacPolicy::pure_aloha:
        case MacPolicy::csma:
            n.operational = true;
            n.operational_at_ms = 0.0;
            break;
        case MacPolicy::slotted_aloha: {
            // Stagger initial beacon acquisition across one broadcast period.
            std::uniform_real_distribution<double> d(0.0, beacons_.interval_ms);
            queue_.push(d(rng_.get(Stream::backoff)), EventKind::sync_wakeup, i, 3);
            break;
        }
        case MacPolicy::tdma: {
            // Power-on: the device contends for the reserved access slot.
            advance_fsm(i, FsmEvent::power_on);
            schedule_access_attempt(i, 0);
            break;
        }
    }
}

void Engine::schedule_access_attempt(int i, int attempts) {
    int shift = std::min(attempts, 16);
    long w = std::min<long>(static_cast<long>(cfg_.join_w0_frames) << shift,
                            cfg_.join_w_cap_frames);
    std::uniform_int_distribution<long> d(0, std::max<long>(w - 1, 0));
    long target = frame_of(now_) + 1 + d(rng_.get(Stream::backoff));
    double t = target * frame_ms_ + std::max(0.0, hw_jitter(i));
    if (t >= cfg_.duration_ms()) return;  // network access never completes this run
    queue_.push(t, EventKind::tx_start, i, kAuxControl);
}

void Engine::begin_sync_attempt(int i) {
    Node& n = nodes_[i];
    n.listening = true;
    double timeout = 1.25 * beacons_.interval_ms;
    n.pending_sync = run_sync_attempt(n.clock, beacons_, now_, timeout, sync_policy_,
                                      rng_.get(Stream::sync_error));
    queue_.push(now_ + n.pending_sync.wait_ms, EventKind::sync_wakeup, i,
                n.pending_sync.synced ? 1 : 2);
}

void Engine::maybe_start_resync(int i) {
    Node& n = nodes_[i];
    if (!n.resync_due || n.listening || n.radio_busy || n.tx_scheduled) return;
    if (cfg_.protocol == MacPolicy::tdma) {
        if (n.fsm != FsmState::sleep) return;
        advance_fsm(i, FsmEvent::sync_age_expired);
    }
    begin_sync_attempt(i);
}

void Engine::on_data_ready(int i) {
    Node& n = nodes_[i];
    // Periodic or Poisson generation; positioning payloads supersede each
    // other, so the queue is one packet deep and the newest wins.
    if (cfg_.traffic == TrafficModel::periodic) {
        double next = now_ + cfg_.interval_ms();
        if (next < cfg_.duration_ms()) queue_.push(next, EventKind::data_ready, i);
    } else {
        std::exponential_distribution<double> exp(1.0 / cfg_.interval_ms());
        double next = now_ + exp(rng_.get(Stream::traffic));
        if (next < cfg_.duration_ms()) queue_.push(next, EventKind::data_ready, i);
    }
    if (n.has_pending) {
        metrics_.on_dropped_stale(i, now_);
        trace_event("drop_stale", i, -1, "");
    }
    n.has_pending = true;
    try_dispatch(i);
}

void Engine::try_dispatch(int i) {
    Node& n = nodes_[i];
    if (!n.has_pending || n.radio_busy || n.tx_scheduled) return;
    switch (cfg_.protocol) {
        case MacPolicy::pure_aloha:
            queue_.push(now_, EventKind::tx_start, i, pick_channel());
            n.tx_scheduled = true;
            break;
        case MacPolicy::slotted_aloha:
            if (!n.synced_once || n.suspended || n.listening) return;
            schedule_data_tx_saloha(i);
            break;
        case MacPolicy::csma: {
            if (n.in_backoff) return;
            n.in_backoff = true;
            n.csma_stage = 0;
            n.csma_channel = pick_channel();
            queue_.push(now_ + cfg_.csma.cad_ms, EventKind::backoff_expire, i);
            break;
        }
        case MacPolicy::tdma:
            if (!n.operational || n.suspended || n.listening || n.gave_up_alloc) return;
            if (n.fsm != FsmState::sleep) return;
            advance_fsm(i, FsmEvent::data_ready);
            schedule_data_tx_tdma(i);
            break;
    }
}

void Engine::schedule_data_tx_saloha(int i) {
    Node& n = nodes_[i];
    double local_now = n.clock.local_time(now_);
    double boundary = next_tx_time_slotted_aloha(local_now + kEps, cfg_.slot_ms);
    double t = n.clock.true_from_local(boundary) + hw_jitter(i);
    queue_.push(std::max(now_, t), EventKind::tx_start, i, pick_channel());
    n.tx_scheduled = true;
}

void Engine::schedule_data_tx_tdma(int i) {
    Node& n = nodes_[i];
    double local_now = n.clock.local_time(now_);
    long f = static_cast<long>(std::floor(local_now / frame_ms_));
    if (f < 0) f = 0;
    for (;; ++f) {
        if (!is_active_frame(n.sched.k, n.sched.g, f)) continue;
        double slot_start = f * frame_ms_ + n.sched.slot * cfg_.slot_ms;
        if (slot_start + kEps < local_now) continue;
        double t = n.clock.true_from_local(slot_start) + hw_jitter(i);
        queue_.push(std::max(now_, t), EventKind::tx_start, i, n.sched.channel);
        n.tx_scheduled = true;
        return;
    }
}

void Engine::on_tx_start(int i, int aux) {
    Node& n = nodes_[i];
    if (aux == kAuxControl) {
        // Access-slot contention for join / allocation requests. Obsolete
        // attempts (grant already received) are dropped silently.
        if (cfg_.protocol != MacPolicy::tdma) return;
        if (n.radio_busy) return;
        if (!n.join_done && n.fsm == FsmState::init) {
            start_transmission(i, true, 0);  // reserved access slot
        } else if (n.join_done && n.fsm == FsmState::req && !n.has_alloc) {
            start_transmission(i, true, 0);  // renewed request after a failed grant
        }
        return;
    }
    n.tx_scheduled = false;
    if (!n.has_pending || n.radio_busy || n.suspended) return;
    if (cfg_.protocol == MacPolicy::tdma) {
        if (n.fsm != FsmState::wait) return;
        advance_fsm(i, FsmEvent::slot_boundary);
    }
    n.has_pending = false;  // the packet is committed to the air
    start_transmission(i, false, aux);
}

void Engine::start_transmission(int i, bool is_control, int channel) {
    Node& n = nodes_[i];
    int idx = alloc_inflight();
    InFlight& f = inflight_[idx];
    f.node = i;
    f.is_control = is_control;
    f.is_join = is_control && !n.join_done;
    f.active = true;
    f.tx = Transmission{i, channel, cfg_.radio.sf, now_, toa_ms_, cfg_.tx_power_dbm,
                        n.dist, rx_power_dbm(i)};
    n.radio_busy = true;
    trace_event(is_control ? "ctrl_tx" : "tx_start", i, channel, "");
    account_energy(n.energy, RadioMode::tx, toa_ms_, powers_);
    ChannelState& ch = channels_[channel];
    ch.group.push_back(idx);
    ch.active += 1;
    queue_.push(now_ + toa_ms_, EventKind::tx_end, i, idx);
    if (is_control) ++control_sent_;
}

void Engine::on_tx_end(int inflight_idx) {
    InFlight& f = inflight_[inflight_idx];
    int node_id = f.node;
    int channel = f.tx.channel_index;
    bool was_control = f.is_control;
    Node& n = nodes_[node_id];
    n.radio_busy = false;
    f.active = false;
    if (!was_control && cfg_.protocol == MacPolicy::tdma && n.fsm == FsmState::send)
        advance_fsm(node_id, FsmEvent::tx_done);

    ChannelState& ch = channels_[channel];
    ch.active -= 1;
    if (ch.active == 0) resolve_group(channel);

    maybe_start_resync(node_id);
    try_dispatch(node_id);
}

// Closes one overlap epoch on a channel and books every member's fate.
void Engine::resolve_group(int channel) {
    ChannelState& ch = channels_[channel];
    if (ch.group.empty()) return;
    std::vector<Transmission> txs;
    txs.reserve(ch.group.size());
    for (int idx : ch.group) txs.push_back(inflight_[idx].tx);
    std::vector<RxOutcome> outcomes = resolve_reception(txs, cfg_.link);
    for (std::size_t j = 0; j < ch.group.size(); ++j) {
        const InFlight& f = inflight_[ch.group[j]];
        bool delivered = outcomes[j] == RxOutcome::delivered;
        if (f.is_control) {
            if (delivered) ++control_delivered_;
            trace_event("ctrl_done", f.node, channel, delivered ? "delivered" : "lost");
            handle_control_outcome(f, delivered);
        } else {
            trace_event("rx", f.node, channel,
                        outcomes[j] == RxOutcome::delivered          ? "delivered"
                        : outcomes[j] == RxOutcome::lost_collision   ? "collision"
                                                                     : "below_sensitivity");
            switch (outcomes[j]) {
                case RxOutcome::delivered:
                    metrics_.on_sent(f.node, now_);
                    metrics_.on_delivered(f.node, now_, f.tx.toa_ms, cfg_.payload_bytes);
                    if (cfg_.protocol == MacPolicy::tdma)
                        scheduler_.report_seen(f.node, now_);
                    break;
                case RxOutcome::lost_collision:
                    metrics_.on_sent(f.node, now_);
                    metrics_.on_lost_collision(f.node, now_);
                    break;
                case RxOutcome::lost_below_sensitivity:
                    metrics_.on_sent(f.node, now_);
                    metrics_.on_lost_below_sensitivity(f.node, now_);
                    break;
            }
        }
        free_inflight_.push(ch.group[j]);
    }
    ch.group.clear();
}

void Engine::handle_control_outcome(const InFlight& f, bool delivered) {
    Node& n = nodes_[f.node];
    if (delivered) {
        pending_grants_.push_back(Grant{frame_of(now_) + 1, f.node, f.is_join});
    } else if (f.is_join) {
        ++n.join_attempts;
        schedule_access_attempt(f.node, n.join_attempts);
    } else {
        ++n.req_attempts;
        schedule_access_attempt(f.node, n.req_attempts);
    }
}

void Engine::on_frame_boundary(long frame) {
    reclaimed_total_ += scheduler_.reclaim_expired(now_, cfg_.t_release_s * 1000.0);

    std::vector<Grant> due;
    std::erase_if(pending_grants_, [&](const Grant& g) {
        if (g.due_frame <= frame) { due.push_back(g); return true; }
        return false;
    });
    for (const Grant& g : due) {
        Node& n = nodes_[g.node];
        account_energy(n.energy, RadioMode::rx, toa_ms_, powers_);  // downlink grant
        if (g.is_join) {
            if (n.join_done) continue;  // duplicate grant from a retried join
            n.join_done = true;
            // The access transmission already carried the resource demand;
            // the server answers it one frame after the join grant.
            advance_fsm(g.node, FsmEvent::join_granted);
            n.req_attempts = 0;
            pending_grants_.push_back(Grant{frame + 1, g.node, false});
        } else {
            if (n.has_alloc) continue;
            AllocationRequest req;
            req.dev_id = g.node;
            req.sf = cfg_.radio.sf;
            req.payload_bytes = cfg_.payload_bytes;
            req.is_multi = false;
            req.priority = 0;
            req.k = period_k_;
            AllocationResult res = scheduler_.allocate(req, now_);
            if (!res.ok) {
                ++alloc_failures_;
                n.alloc_failed_ever = true;
                if (n.req_attempts < 12) {
                    ++n.req_attempts;
                    schedule_access_attempt(g.node, n.req_attempts);
                } else {
                    n.gave_up_alloc = true;
                }
                continue;
            }
            if (res.is_reuse) ++reuse_grants_;
            n.has_alloc = true;
            n.sched = DeviceSchedule{g.node, period_k_, res.g, res.first_slot, res.channel};
            n.n_slots = res.n_slots;
            advance_fsm(g.node, FsmEvent::alloc_granted);
            begin_sync_attempt(g.node);
        }
    }

    double next = (frame + 1) * frame_ms_;
    if (next < cfg_.duration_ms())
        queue_.push(next, EventKind::frame_boundary, -1, static_cast<int>(frame + 1));
}

void Engine::on_sync_wakeup(int i, int aux) {
    Node& n = nodes_[i];
    switch (aux) {
        case 0: {  // sync-age timer
            if (now_ + kEps < n.last_sync_ms + cfg_.resync_s * 1000.0) return;  // stale
            n.resync_due = true;
            // Steady-state listening uses a short window around the next
            // beacon; the device stays on the air until the window opens.
            double k = std::ceil((now_ - beacons_.first_tx_ms) / beacons_.interval_ms);
            double completion = beacons_.first_tx_ms + k * beacons_.interval_ms + beacons_.toa_ms;
            double t_begin = std::max(now_, completion - cfg_.listen_ms);
            queue_.push(t_begin, EventKind::sync_wakeup, i, 3);
            break;
        }
        case 1: {  // attempt completed with a beacon
            n.listening = false;
            double listen_ms = n.initial_sync_done ? cfg_.listen_ms : n.pending_sync.wait_ms;
            account_energy(n.energy, RadioMode::sync_listen, listen_ms, powers_);
            n.clock = n.pending_sync.clock;
            n.synced_once = true;
            n.initial_sync_done = true;
            n.last_sync_ms = now_;
            n.sync_failures = 0;
            n.suspended = false;
            n.resync_due = false;
            if (cfg_.protocol == MacPolicy::tdma) advance_fsm(i, FsmEvent::sync_done);
            if (!n.operational) {
                bool ready = cfg_.protocol == MacPolicy::slotted_aloha || n.has_alloc;
                if (ready) {
                    n.operational = true;
                    n.operational_at_ms = now_;
                }
            }
            queue_.push(now_ + cfg_.resync_s * 1000.0, EventKind::sync_wakeup, i, 0);
            try_dispatch(i);
            break;
        }
        case 2: {  // attempt timed out
            n.listening = false;
            double listen_ms = n.initial_sync_done ? cfg_.listen_ms : n.pending_sync.wait_ms;
            account_energy(n.energy, RadioMode::sync_listen, listen_ms, powers_);
            ++n.sync_failures;
            if (n.sync_failures >= cfg_.holdover_max_failures) n.suspended = true;
            if (cfg_.protocol == MacPolicy::tdma) advance_fsm(i, FsmEvent::sync_timeout);
            queue_.push(now_ + n.pending_sync.retry_after_ms, EventKind::sync_wakeup, i, 3);
            break;
        }
        case 3: {  // begin (or retry) an attempt
            if (n.listening) return;
            if (n.synced_once && !n.resync_due) return;  // stale window begin
            if (cfg_.protocol == MacPolicy::tdma) {
                if (n.fsm == FsmState::sleep)
                    advance_fsm(i, FsmEvent::sync_age_expired);
                else if (n.fsm != FsmState::sync)
                    return;  // mid-transmission; the sleep entry picks it up
            } else if (n.radio_busy || n.tx_scheduled) {
                return;  // deferred to the end of the transmission
            }
            begin_sync_attempt(i);
            break;
        }
    }
}

void Engine::on_backoff_expire(int i) {
    Node& n = nodes_[i];
    if (!n.in_backoff) return;
    account_energy(n.energy, RadioMode::rx, cfg_.csma.cad_ms, powers_);  // CAD listen
    double power = channel_power_at_node_dbm(i, n.csma_channel, now_);
    if (power < cfg_.csma.cca_threshold_dbm) {
        n.in_backoff = false;
        if (n.has_pending && !n.radio_busy) {
            n.has_pending = false;
            start_transmission(i, false, n.csma_channel);
        }
        return;
    }
    ++n.csma_stage;
    if (n.csma_stage >= cfg_.csma.max_backoff_stages) {
        n.in_backoff = false;
        n.has_pending = false;
        metrics_.on_gave_up(i, now_);
        trace_event("gave_up", i, n.csma_channel, "");
        return;
    }
    std::uniform_int_distribution<int> d(0, cfg_.csma.contention_window - 1);
    double backoff = d(rng_.get(Stream::backoff)) * cfg_.csma.backoff_slot_ms;
    queue_.push(now_ + backoff + cfg_.csma.cad_ms, EventKind::backoff_expire, i);
}

SimulationReport Engine::run() {
    setup();
    while (!queue_.empty() && !done_) {
        SimEvent e = queue_.pop();
        now_ = e.time_ms;
        switch (e.kind) {
            case EventKind::sim_end: done_ = true; break;
            case EventKind::data_ready: on_data_ready(e.node_id); break;
            case EventKind::tx_start: on_tx_start(e.node_id, e.aux); break;
            case EventKind::tx_end: on_tx_end(e.aux); break;
            case EventKind::frame_boundary: on_frame_boundary(e.aux); break;
            case EventKind::sync_wakeup: on_sync_wakeup(e.node_id, e.aux); break;
            case EventKind::backoff_expire: on_backoff_expire(e.node_id); break;
            case EventKind::beacon_tx: break;  // beacons are folded into sync attempts
        }
    }

    SimulationReport rep;
    rep.protocol = to_string(cfg_.protocol);
    rep.n_nodes = cfg_.n_nodes;
    rep.sf = cfg_.radio.sf;
    rep.interval_s = cfg_.interval_s;
    rep.seed = seed_;
    rep.duration_s = cfg_.duration_s;

    double total_energy = 0.0;
    long sync_events = 0;
    double op_sum = 0.0;
    long unallocated = 0;
    for (Node& n : nodes_) {
        double sleep_ms = std::max(0.0, cfg_.duration_ms() - n.energy.active_ms);
        account_energy(n.energy, RadioMode::sleep, sleep_ms, powers_);
        total_energy += n.energy.total_mj();
        sync_events += n.energy.n_sync;
        rep.e_tx_mj += n.energy.e_tx_mj;
        rep.e_rx_mj += n.energy.e_rx_mj;
        rep.e_sync_mj += n.energy.e_sync_mj;
        rep.e_sleep_mj += n.energy.e_sleep_mj;
        op_sum += n.operational_at_ms >= 0.0 ? n.operational_at_ms : cfg_.duration_ms();
        bool starved = n.gave_up_alloc || (n.alloc_failed_ever && !n.has_alloc);
        if (cfg_.protocol == MacPolicy::tdma && starved) ++unallocated;
    }

    MetricsSummary m = compute_metrics(metrics_, cfg_.duration_s - cfg_.warmup_s,
                                       cfg_.channels, total_energy);
    rep.sent = metrics_.sent();
    rep.received = metrics_.received();
    rep.pdr = m.pdr;
    rep.pdr_ci95 = m.pdr_ci95;
    rep.throughput_kbps = m.throughput_kbps;
    rep.utilization = m.utilization;
    rep.energy_mj_per_success = m.energy_mj_per_success;
    rep.sync_events = sync_events;
    rep.collisions = metrics_.lost_collision();
    rep.below_sensitivity = metrics_.lost_below_sensitivity();
    rep.dropped_stale = metrics_.dropped_stale();
    rep.gave_up = metrics_.gave_up();
    rep.control_sent = control_sent_;
    rep.control_delivered = control_delivered_;
    rep.offered_kbps = rep.sent * cfg_.payload_bytes * 8.0 / cfg_.duration_s / 1000.0;
    rep.energy_total_mj = total_energy;
    rep.reuse_grants = reuse_grants_;
    rep.reclaimed = reclaimed_total_;
    rep.alloc_failures = alloc_failures_;
    rep.mean_operational_s = op_sum / std::max(1, cfg_.n_nodes) / 1000.0;
    if (unallocated > 0)
        rep.note = "infeasible:" + std::to_string(unallocated) + "_nodes_unallocated";
    rep.trace = std::move(trace_);
    rep.fsm_log = std::move(fsm_log_);
    if (cfg_.trace) {
        for (const AllocationLogRow& row : scheduler_.log()) {
            char buf[200];
            std::string loads;
            for (double l : row.loads) {
                char lb[16];
                std::snprintf(lb, sizeof(lb), "%s%.3f", loads.empty() ? "" : "|", l);
                loads += lb;
            }
            std::snprintf(buf, sizeof(buf), "%.6f,%d,%c,%d,%d,%d,%d,%s", row.t_ms, row.dev_id,
                          row.type, row.channel, row.first_slot, row.n_slots,
                          row.is_reuse ? 1 : 0, loads.c_str());
            rep.alloc_log.emplace_back(buf);
        }
    }
    return rep;
}

} // namespace

SimulationReport run_simulation(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Engine engine(cfg, seed);
    return engine.run();
}

} // namespace lorasim
