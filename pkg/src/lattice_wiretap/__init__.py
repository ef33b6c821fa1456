"""Almost-universal lattice wiretap codes over fading channels."""
