var endpoints = {};
api.on("hit", function (req) {
  var query = req.query;
  var ep = endpoints[query.path];
  count(query);
  if (endpoints.hasOwnProperty(query.path)) {
    ep(query);
  }
});
