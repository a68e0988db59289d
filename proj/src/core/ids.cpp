#include "cliniflow/core/ids.hpp"

#include <boost/uuid/random_generator.hpp>
#include <boost/uuid/string_generator.hpp>
#include <boost/uuid/uuid_io.hpp>

namespace cliniflow {

std::string new_id() {
  thread_local boost::uuids::random_generator generator;
  return boost::uuids::to_string(generator());
}

bool is_uuid(const std::string& s) {
  if (s.size() != 36) return false;
  try {
    const auto u = boost::uuids::string_generator()(s);
    return u.version() == boost::uuids::uuid::version_random_number_based;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace cliniflow
