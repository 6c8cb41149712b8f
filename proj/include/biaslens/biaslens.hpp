// Copyright 2026 The biaslens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "biaslens/augment.hpp"
#include "biaslens/cluster.hpp"
#include "biaslens/corpus.hpp"
#include "biaslens/embed.hpp"
#include "biaslens/error.hpp"
#include "biaslens/metrics_db.hpp"
#include "biaslens/metrics_model.hpp"
#include "biaslens/random.hpp"
#include "biaslens/report.hpp"
#include "biaslens/text.hpp"
