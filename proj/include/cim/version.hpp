#pragma once

#define CIM_VERSION "0.1.0"
