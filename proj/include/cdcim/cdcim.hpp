// Copyright 2026 The cdcim Authors
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

#include "cdcim/adc.hpp"
#include "cdcim/caat.hpp"
#include "cdcim/capnet.hpp"
#include "cdcim/common.hpp"
#include "cdcim/costmodel.hpp"
#include "cdcim/experiments.hpp"
#include "cdcim/finetune.hpp"
#include "cdcim/jsonio.hpp"
#include "cdcim/linalg.hpp"
#include "cdcim/macro.hpp"
#include "cdcim/nn.hpp"
#include "cdcim/numeric.hpp"
#include "cdcim/parallel.hpp"
