"""Play the three-blade scenario script and narrate the event stream.

The simulator stands in for the barcode scanner, both depth cameras, and the
operator's hands: a frame of clouds plus detections fires each time the hands
leave the work area.
"""

from bladecas.fixtures import (
    BLADE_MODEL_ID,
    STUDY_SCENARIO,
    STUDY_SERIALS,
    make_blade_mesh,
    make_workstation_cameras,
)
from bladecas.simulate import (
    FrameReady,
    HandPresenceEvent,
    ScanEvent,
    SceneSimulator,
    parse_scenario,
)

script = parse_scenario(STUDY_SCENARIO)
print(f"scenario: {len(script.events)} scripted events, "
      f"noise sigma {1000 * script.noise_sigma:.1f} mm, cameras {script.camera_ids}")

simulator = SceneSimulator(
    cameras=make_workstation_cameras(),
    meshes={BLADE_MODEL_ID: make_blade_mesh()},
    serial_models={s: BLADE_MODEL_ID for s in STUDY_SERIALS},
    pixel_stride=4,
)

for event in simulator.run_scenario(script):
    if isinstance(event, ScanEvent):
        print(f"t={event.time:7.1f}  scan     serial {event.serial}")
    elif isinstance(event, HandPresenceEvent):
        state = "entered" if event.present else "left"
        print(f"t={event.time:7.1f}  hands    {state} the work area")
    elif isinstance(event, FrameReady):
        sizes = {cam: len(cloud) for cam, cloud in event.clouds.items()}
        print(f"t={event.time:7.1f}  frame    {event.serial}: clouds {sizes}, "
              f"detections {sorted(event.detections)}")
