# Show that adding the PSD moment constraint does not move the McCormick
# bound: the McCormick optimum lifts to a PSD moment matrix.
from bilicover import generate_instance, verify_sdp_equals_mccormick

for seed in range(5):
    inst = generate_instance(40, 60, 0.15, "MixedSigns" if seed % 2 else "NonNegative", seed=seed)
    res = verify_sdp_equals_mccormick(inst)
    cert = res.certificate
    print(f"seed {seed}: {res.status.value}  z={res.z_mc:.6f}  min eig={cert.min_eig:.2e}  "
          f"dominance slack={cert.gershgorin_slack:.2e}  routes agree={cert.routes_agree}")
