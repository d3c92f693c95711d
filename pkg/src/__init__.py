# Painleve Geometry Engine Package
