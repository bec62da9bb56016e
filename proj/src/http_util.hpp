#pragma once

// Internal helpers around cpp-httplib. Only included by .cpp files that talk HTTP.

#include <stdexcept>
#include <string>
#include <string_view>

namespace layout_agent::detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

inline SplitUrl split_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw std::invalid_argument("url '" + std::string(url) + "' has no scheme");
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

}  // namespace layout_agent::detail
