"""
The `app_metadata` module stores data for formatting metadata in the main.py application file.
"""
tags_metadata = [
    {
        "name": "codes",
        "description": "CSS code construction from classical codes or coset leaders, "
                       "invariant flags and the Pauli error partition",
    },
    {
        "name": "transversal",
        "description": "Legitimacy of transversal gates and their logical action, "
                       "checked combinatorially and by sparse simulation",
    },
    {
        "name": "preparations",
        "description": "Recovery merged with logical measurement and stabilizer-based state preparation",
    },
    {
        "name": "networks",
        "description": "Fault-tolerant networks: simulation, resource counts, fault injection, "
                       "Toffoli outcome analysis and single-online-step compilation",
    },
]

app_metadata_description = """
Verification toolkit for fault-tolerant networks on CSS code blocks:
1. Build [[n, k, d]] CSS codes and report their invariants.
2. Check transversal gates for legitimacy and logical action.
3. Run recovery merged with logical measurements and stabilizer-based preparations.
4. Simulate networks at the logical or physical level, count online/offline resources
   and certify them against single faults.
Exit status: 0 success, 1 failed check, 2 usage, parse, file or domain error.
"""
