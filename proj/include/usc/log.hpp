#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace usc {

using WarningSink = std::function<void(std::string_view)>;

/// Routes a warning to the installed sink (stderr by default).
void warn(std::string_view message);

/// Replaces the warning sink and returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

/// Installs a sink for the lifetime of the guard, restoring the old one afterwards.
class ScopedWarningSink {
 public:
  explicit ScopedWarningSink(WarningSink sink) : previous_(set_warning_sink(std::move(sink))) {}
  ~ScopedWarningSink() { set_warning_sink(std::move(previous_)); }
  ScopedWarningSink(const ScopedWarningSink&) = delete;
  ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

 private:
  WarningSink previous_;
};

}  // namespace usc
