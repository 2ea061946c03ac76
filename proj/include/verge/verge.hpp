#pragma once

#include "verge/annotate.hpp"
#include "verge/collector.hpp"
#include "verge/dataset.hpp"
#include "verge/error.hpp"
#include "verge/evaluation.hpp"
#include "verge/features.hpp"
#include "verge/forest.hpp"
#include "verge/gaze.hpp"
#include "verge/geometry.hpp"
#include "verge/metrics.hpp"
#include "verge/net.hpp"
#include "verge/oculomotor.hpp"
#include "verge/one_euro.hpp"
#include "verge/pipeline.hpp"
#include "verge/point.hpp"
#include "verge/realtime.hpp"
#include "verge/stats.hpp"
#include "verge/synth.hpp"
