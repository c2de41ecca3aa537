# Hermitian linear algebra and quantum channels
