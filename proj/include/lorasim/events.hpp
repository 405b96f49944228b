#pragma once

#include <cstdint>
#include <queue>
#include <vector>

namespace lorasim {

enum class EventKind : std::uint8_t {
    tx_start,
    tx_end,
    beacon_tx,
    sync_wakeup,
    data_ready,
    backoff_expire,
    frame_boundary,
    sim_end,
};

struct SimEvent {
    double time_ms = 0.0;
    std::uint64_t seq = 0;   // insertion order; makes dispatch a total order
    EventKind kind = EventKind::sim_end;
    int node_id = -1;
    int aux = 0;
};

// Deterministic event timeline: events dispatch in (time, seq) order, with
// sequence numbers assigned at insertion. Runs are bit-reproducible under
// a fixed seed.
class EventQueue {
  public:
    void push(double time_ms, EventKind kind, int node_id = -1, int aux = 0) {
        heap_.push(SimEvent{time_ms, next_seq_++, kind, node_id, aux});
    }

    bool empty() const { return heap_.empty(); }

    SimEvent pop() {
        SimEvent e = heap_.top();
        heap_.pop();
        return e;
    }

    const SimEvent& peek() const { return heap_.top(); }

  private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.time_ms != b.time_ms) return a.time_ms > b.time_ms;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

} // namespace lorasim
