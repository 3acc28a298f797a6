#pragma once

#include <cstdint>
#include <string>

namespace tbger::testing {

// Parameters of a generated Stack Exchange-like site. Users specialise in
// topics (groups of tags), join and leave at different times and differ in
// activity and answer quality; the asker accepts the best answer.
struct SiteSpec {
  int users = 120;
  int topics = 8;
  int tags_per_topic = 6;
  int months = 36;
  int questions_per_month = 45;
  double accept_rate = 0.75;
  std::uint64_t seed = 2024;
};

// Posts.xml document for the site.
std::string generate_posts_xml(const SiteSpec& spec);

}  // namespace tbger::testing
