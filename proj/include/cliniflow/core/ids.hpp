#pragma once

#include <string>

namespace cliniflow {

// Random (version 4) UUID in canonical lowercase form.
std::string new_id();

bool is_uuid(const std::string& s);

}  // namespace cliniflow
