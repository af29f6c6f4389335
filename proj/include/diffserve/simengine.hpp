#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

namespace diffserve {

enum class EventKind : uint8_t {
    QueryArrival,
    BatchStart,
    BatchComplete,
    ControlTick,
    TraceEnd,
};

const char* to_string(EventKind k);

struct Event {
    double time = 0.0;
    uint64_t seq = 0; // schedule order; breaks ties at equal time
    EventKind kind = EventKind::QueryArrival;
    int32_t worker = -1;  // BatchStart / BatchComplete
    uint64_t payload = 0; // query id (QueryArrival) or batch id (BatchComplete)
};

// Min-heap of events ordered by (time, seq) with a monotone virtual clock.
// Scheduling in the past is a causality error; scheduling at exactly now()
// is legal and runs after the current event (its seq is larger).
class EventQueue {
public:
    using Handler = std::function<void(const Event&)>;

    double now() const { return now_; }
    bool empty() const { return heap_.empty(); }
    size_t pending() const { return heap_.size(); }

    // Returns the scheduled event's sequence number.
    uint64_t schedule(double time, EventKind kind, int32_t worker = -1, uint64_t payload = 0);

    // Processes events in (time, seq) order while the next event's time is
    // <= end_time. Returns the number of events processed. The clock ends at
    // the last processed event's time if the queue drained, else end_time;
    // with nothing to process it ends at end_time.
    size_t run_until(double end_time, const Handler& handle);

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    double now_ = 0.0;
    uint64_t next_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

} // namespace diffserve
