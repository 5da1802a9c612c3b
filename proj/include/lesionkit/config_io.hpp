// Copyright 2026 The lesionkit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "json.hpp"
#include "lesionkit/dataset.hpp"
#include "lesionkit/detector.hpp"
#include "lesionkit/ldpo.hpp"

namespace lesionkit {

/// JSON bindings for the configuration objects. Missing keys keep their
/// defaults; unknown keys are ignored. Type errors raise ValidationError.

LdpoConfig ldpo_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LdpoConfig& c);

TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);

/// Synthetic spec; "classes" defaults to the five built-in classes.
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticSpec& s);

}  // namespace lesionkit
