#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lorasim/superframe.hpp"

namespace lorasim {

struct SchedulerConfig {
    int channels = 8;
    int slots_per_frame = 20;
    double slot_ms = 200.0;                    // sizes multi-slot demands
    double rho_max = 0.3;                      // multi-slot quota cap
    bool reuse_enabled = true;                 // priority-based reuse at saturation
    bool reuse_requires_higher_priority = false;
    bool hard_reject_over_quota = false;       // otherwise degrade to single slot
    int k_max = 0;                             // superframe depth for residue sharing
    std::vector<std::pair<int, int>> reserved = {{0, 0}};  // (channel, slot) cells
};

struct DeviceRecord {
    int dev_id = -1;
    int channel = -1;
    int first_slot = -1;
    int n_slots = 0;
    double t_last_ms = 0.0;
    int priority = 0;  // lower value = less critical
    bool is_reuse = false;
    bool is_multi = false;
    int k = 0;
    int g = 0;
};

struct AllocationRequest {
    int dev_id = -1;
    int sf = 9;
    int payload_bytes = 10;
    bool is_multi = false;
    int priority = 0;
    int k = 0;  // period exponent, 0 for the flat frame
};

struct AllocationResult {
    bool ok = false;
    int channel = -1;
    int first_slot = -1;
    int n_slots = 0;
    int g = 0;
    bool is_reuse = false;
    bool degraded = false;  // multi request served single-slot
    std::string reason;
};

struct AllocationLogRow {
    double t_ms = 0.0;
    int dev_id = -1;
    char type = 'Q';  // 'Q' request, 'R' report, 'X' reclaim
    int channel = -1;
    int first_slot = -1;
    int n_slots = 0;
    bool is_reuse = false;
    std::vector<double> loads;
};

// Application-server resource authority: device table plus the
// channel x slot occupancy grid. All mutations are serialized through one
// decision sequence; reads between mutations are safe.
class Scheduler {
  public:
    explicit Scheduler(SchedulerConfig cfg);

    // Frees every device idle longer than t_release and removes its record.
    int reclaim_expired(double t_now_ms, double t_release_ms);

    // Normalized occupancy of one channel; reserved cells count as occupied.
    double channel_load(int channel) const;

    AllocationResult allocate(const AllocationRequest& req, double t_now_ms);

    // Type == report: refreshes the device's activity timestamp.
    void report_seen(int dev_id, double t_now_ms);

    bool multislot_quota_ok(int n_multi_current, int n_new, double rho_max) const;
    int multi_slots_in_use() const;

    int nominal_capacity() const;  // channels * slots - reserved cells
    bool is_reserved(int channel, int slot) const;
    const std::map<int, DeviceRecord>& table() const { return table_; }
    const SchedulerConfig& config() const { return cfg_; }
    // Occupants of one cell as superframe schedules (for contention checks).
    std::vector<DeviceSchedule> cell_occupants(int channel, int slot) const;

    const std::vector<AllocationLogRow>& log() const { return log_; }
    void clear_log() { log_.clear(); }

  private:
    struct Occupant {
        int dev_id;
        int k;
        int g;
    };

    int cell_index(int channel, int slot) const { return channel * cfg_.slots_per_frame + slot; }
    bool cell_occupied(int channel, int slot) const;
    void release_device(const DeviceRecord& rec);
    std::optional<int> free_offset_for_run(int channel, int first_slot, int n_slots,
                                           int k) const;
    int best_effort_offset(int channel, int first_slot, int n_slots, int k) const;
    void occupy(int channel, int first_slot, int n_slots, const Occupant& occ);
    void log_event(double t_ms, int dev_id, char type, const AllocationResult& res);

    SchedulerConfig cfg_;
    std::vector<std::vector<Occupant>> cells_;
    std::vector<bool> reserved_;
    std::map<int, DeviceRecord> table_;
    std::vector<AllocationLogRow> log_;
};

// Downlink control messages per successful uplink packet for a stable
// session: two control frames amortized over the session's uplinks.
double control_overhead_eta(double t_up_s, double t_session_s);

// Consecutive slots needed for one uplink: single slot unless the device
// is multi-slot, in which case the airtime is packed into ceil(toa / slot).
int required_slots(int sf, int payload_bytes, double slot_len_ms, bool is_multi);

} // namespace lorasim
