#include "holotrack/error.hpp"

#include <iostream>
#include <mutex>

namespace holotrack {

namespace {
std::mutex sink_mutex;
WarningSink& sink_storage() {
    static WarningSink sink;
    return sink;
}
}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard lock(sink_mutex);
    auto previous = std::move(sink_storage());
    sink_storage() = std::move(sink);
    return previous;
}

void warn(const std::string& message) {
    std::lock_guard lock(sink_mutex);
    if (sink_storage()) {
        sink_storage()(message);
    } else {
        std::cerr << "warning: " << message << '\n';
    }
}

}  // namespace holotrack
