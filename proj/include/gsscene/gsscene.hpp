#pragma once

// Umbrella header for the core library (no HTTP dependencies).

#include "gsscene/collision.hpp"
#include "gsscene/densify.hpp"
#include "gsscene/error.hpp"
#include "gsscene/gaussians.hpp"
#include "gsscene/guide.hpp"
#include "gsscene/image_io.hpp"
#include "gsscene/kdtree.hpp"
#include "gsscene/llm.hpp"
#include "gsscene/optimizer.hpp"
#include "gsscene/ply.hpp"
#include "gsscene/quaternion.hpp"
#include "gsscene/random.hpp"
#include "gsscene/renderer.hpp"
#include "gsscene/scene.hpp"
#include "gsscene/scene_io.hpp"
#include "gsscene/schedule.hpp"
#include "gsscene/transforms.hpp"
