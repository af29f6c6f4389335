#include "diffserve/simengine.hpp"

#include <stdexcept>
#include <string>

namespace diffserve {

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::QueryArrival: return "QueryArrival";
        case EventKind::BatchStart: return "BatchStart";
        case EventKind::BatchComplete: return "BatchComplete";
        case EventKind::ControlTick: return "ControlTick";
        case EventKind::TraceEnd: return "TraceEnd";
    }
    return "?";
}

uint64_t EventQueue::schedule(double time, EventKind kind, int32_t worker, uint64_t payload) {
    if (time < now_)
        throw std::logic_error("causality violation: scheduling " + std::string(to_string(kind)) +
                               " at t=" + std::to_string(time) + " before now=" +
                               std::to_string(now_));
    Event e;
    e.time = time;
    e.seq = next_seq_++;
    e.kind = kind;
    e.worker = worker;
    e.payload = payload;
    heap_.push(e);
    return e.seq;
}

size_t EventQueue::run_until(double end_time, const Handler& handle) {
    size_t processed = 0;
    while (!heap_.empty() && heap_.top().time <= end_time) {
        Event e = heap_.top();
        heap_.pop();
        now_ = e.time;
        ++processed;
        handle(e);
    }
    // Queue drained: the run ended at the last event. Otherwise (or if there
    // was nothing to do) time advances to the requested horizon.
    if (!heap_.empty() || processed == 0) now_ = std::max(now_, end_time);
    return processed;
}

} // namespace diffserve
